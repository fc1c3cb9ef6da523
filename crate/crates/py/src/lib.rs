//! Python bindings: a `Detector` class wrapping the fitted model plus
//! helpers for metrics, synthetic data, and the weight solver.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use brdad::{AvgDistanceProfile, BagCount, BagModel, Dataset, FitOptions, HuberSpec, MixtureSpec};

fn py_err(e: brdad::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dataset_from_rows(points: Vec<Vec<f64>>) -> PyResult<Dataset> {
    Dataset::from_rows(points).map_err(py_err)
}

/// Anomaly detector scoring points by their bagged regularized
/// k-distance to disjoint reference subsets.
#[pyclass]
struct Detector {
    model: BagModel,
}

#[pymethods]
impl Detector {
    /// Fit on a list of points. `bags=None` picks the bag count from the
    /// sample size (1 / 5 / 10).
    #[staticmethod]
    #[pyo3(signature = (points, bags=None, seed=0, scale=true))]
    fn fit(points: Vec<Vec<f64>>, bags: Option<usize>, seed: u64, scale: bool) -> PyResult<Self> {
        let data = dataset_from_rows(points)?;
        let options = FitOptions {
            bags: bags.map_or(BagCount::Auto, BagCount::Fixed),
            seed,
            scale,
        };
        let model = brdad::fit(&data, &options).map_err(py_err)?;
        Ok(Detector { model })
    }

    /// Score the fitted dataset (row i must be training row i; exact
    /// self-matches in reference sets are excluded).
    fn score(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let data = dataset_from_rows(points)?;
        Ok(self.model.score(&data).map_err(py_err)?.into_scores())
    }

    /// Score previously unseen points.
    fn score_fresh(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let data = dataset_from_rows(points)?;
        Ok(self.model.score_fresh(&data).map_err(py_err)?.into_scores())
    }

    /// Score the fitted dataset and return `(scores, flagged_indices)`
    /// with the m highest scorers flagged, best first.
    fn detect(&self, points: Vec<Vec<f64>>, m: usize) -> PyResult<(Vec<f64>, Vec<usize>)> {
        let data = dataset_from_rows(points)?;
        let scores = self.model.detect(&data, m).map_err(py_err)?;
        let flagged = scores.flagged();
        Ok((scores.into_scores(), flagged))
    }

    /// Bagged regularized k-distance of a single fresh point.
    fn bagged_distance(&self, point: Vec<f64>) -> PyResult<f64> {
        self.model.bagged_distance(&point).map_err(py_err)
    }

    /// Density estimate at a single fresh point.
    fn density(&self, point: Vec<f64>) -> PyResult<f64> {
        self.model.brdde_density(&point).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.model.to_json().map_err(py_err)
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Detector {
            model: BagModel::from_json(json).map_err(py_err)?,
        })
    }

    #[getter]
    fn bags(&self) -> usize {
        self.model.bag_count()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.model.d()
    }

    #[getter]
    fn gamma_mix(&self) -> f64 {
        self.model.gamma_mix()
    }

    /// Per-bag number of neighbor ranks with positive weight.
    fn cutoffs(&self) -> Vec<usize> {
        (0..self.model.bag_count())
            .map(|b| self.model.bag_weights(b).cutoff())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Detector(d={}, bags={}, n_train={})",
            self.model.d(),
            self.model.bag_count(),
            self.model.n_train()
        )
    }
}

/// Probability that a random anomaly (label 1) outranks a random normal
/// point, ties counted 1/2.
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    brdad::auc(&scores, &labels).map_err(py_err)
}

/// Bag count by sample size: 1 up to 10k rows, 5 up to 50k, 10 beyond.
#[pyfunction]
fn auto_bag_count(n: usize) -> usize {
    brdad::auto_bag_count(n)
}

/// Solve the weight problem for a sorted average-distance vector;
/// returns `(weights, mu)` with weights padded to the input length.
#[pyfunction]
#[pyo3(signature = (profile, bags=1))]
fn solve_weights(profile: Vec<f64>, bags: usize) -> PyResult<(Vec<f64>, f64)> {
    let profile = AvgDistanceProfile::new(profile).map_err(py_err)?;
    let solved = brdad::solve_srm(&profile, bags).map_err(py_err)?;
    let mut weights = vec![0.0; profile.len()];
    weights[..solved.cutoff()].copy_from_slice(solved.weights());
    Ok((weights, solved.mu()))
}

/// Sample the contamination model (two-blob normals inside the unit
/// cube plus uniform anomalies); returns `(points, labels)`.
#[pyfunction]
#[pyo3(signature = (n, d, contamination, seed=0))]
fn sample_huber(
    n: usize,
    d: usize,
    contamination: f64,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<u8>)> {
    let spec = HuberSpec::new(contamination, MixtureSpec::two_blobs(d)).map_err(py_err)?;
    let ld = brdad::sample_huber(&spec, n, seed).map_err(py_err)?;
    let points = ld.data.rows().map(|r| r.to_vec()).collect();
    Ok((points, ld.labels))
}

#[pymodule]
fn brdad_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Detector>()?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(auto_bag_count, m)?)?;
    m.add_function(wrap_pyfunction!(solve_weights, m)?)?;
    m.add_function(wrap_pyfunction!(sample_huber, m)?)?;
    Ok(())
}
