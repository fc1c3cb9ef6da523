//! Synthetic data with known ground truth: isotropic Gaussian mixtures
//! with an exact density, and a contamination sampler mixing a normal
//! component with uniform anomalies on the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, LabeledDataset};
use crate::error::{Error, Result};

/// One isotropic Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// A mixture of isotropic Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<MixtureComponent>,
    d: usize,
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs >= 1 component".into()));
        }
        let d = components[0].mean.len();
        if d == 0 {
            return Err(Error::InvalidArgument("component mean must be non-empty".into()));
        }
        let mut total = 0.0;
        for c in &components {
            if c.mean.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.mean.len(),
                });
            }
            if !(c.weight > 0.0) || !(c.variance > 0.0) {
                return Err(Error::InvalidArgument(
                    "component weights and variances must be positive".into(),
                ));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotSimplex(format!("mixture weights sum to {total}")));
        }
        Ok(MixtureSpec { components, d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// Standard normal in `d` dimensions.
    pub fn standard_normal(d: usize) -> Self {
        MixtureSpec::new(vec![MixtureComponent {
            weight: 1.0,
            mean: vec![0.0; d],
            variance: 1.0,
        }])
        .expect("valid spec")
    }

    /// Two tight blobs inside the unit cube:
    /// `0.4 N(0.3·1, 0.01 I) + 0.6 N(0.7·1, 0.0025 I)`.
    pub fn two_blobs(d: usize) -> Self {
        MixtureSpec::new(vec![
            MixtureComponent {
                weight: 0.4,
                mean: vec![0.3; d],
                variance: 0.01,
            },
            MixtureComponent {
                weight: 0.6,
                mean: vec![0.7; d],
                variance: 0.0025,
            },
        ])
        .expect("valid spec")
    }

    /// 1-D balanced pair: `0.5 N(0.3, 0.01) + 0.5 N(0.7, 0.0025)`.
    pub fn two_blobs_1d_balanced() -> Self {
        MixtureSpec::new(vec![
            MixtureComponent {
                weight: 0.5,
                mean: vec![0.3],
                variance: 0.01,
            },
            MixtureComponent {
                weight: 0.5,
                mean: vec![0.7],
                variance: 0.0025,
            },
        ])
        .expect("valid spec")
    }
}

fn sample_component(spec: &MixtureSpec, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = spec.components.len() - 1;
    for (c, comp) in spec.components.iter().enumerate() {
        acc += comp.weight;
        if u < acc {
            chosen = c;
            break;
        }
    }
    let comp = &spec.components[chosen];
    let sd = comp.variance.sqrt();
    for &m in &comp.mean {
        let z: f64 = rng.sample(StandardNormal);
        out.push(m + sd * z);
    }
}

/// Draw `n` i.i.d. points from the mixture, deterministically per seed.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity(n * spec.d);
    for _ in 0..n {
        sample_component(spec, &mut rng, &mut flat);
    }
    Dataset::from_flat(flat, n, spec.d)
}

/// Exact mixture density at a point.
pub fn mixture_density(spec: &MixtureSpec, point: &[f64]) -> f64 {
    assert_eq!(point.len(), spec.d, "point dimension mismatch");
    let d = spec.d as f64;
    let mut density = 0.0;
    for comp in &spec.components {
        let norm = (2.0 * std::f64::consts::PI * comp.variance).powf(-d / 2.0);
        let sq: f64 = point
            .iter()
            .zip(&comp.mean)
            .map(|(x, m)| (x - m) * (x - m))
            .sum();
        density += comp.weight * norm * (-sq / (2.0 * comp.variance)).exp();
    }
    density
}

/// Contamination model: with probability `contamination` a point is an
/// anomaly drawn uniformly from `[0,1]^d`, otherwise it comes from the
/// normal mixture, rejection-sampled into the unit cube.
#[derive(Debug, Clone)]
pub struct HuberSpec {
    pub contamination: f64,
    pub normal: MixtureSpec,
}

impl HuberSpec {
    pub fn new(contamination: f64, normal: MixtureSpec) -> Result<Self> {
        if !(contamination > 0.0 && contamination < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "contamination must be in (0,1), got {contamination}"
            )));
        }
        Ok(HuberSpec {
            contamination,
            normal,
        })
    }
}

const MAX_REJECTION_ATTEMPTS: usize = 10_000;

/// Sample the contamination model; label 1 marks anomalies.
pub fn sample_huber(spec: &HuberSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    let d = spec.normal.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut draw = Vec::with_capacity(d);
    for _ in 0..n {
        if rng.random_bool(spec.contamination) {
            for _ in 0..d {
                flat.push(rng.random_range(0.0..1.0));
            }
            labels.push(1);
        } else {
            let mut attempts = 0;
            loop {
                draw.clear();
                sample_component(&spec.normal, &mut rng, &mut draw);
                if draw.iter().all(|v| (0.0..=1.0).contains(v)) {
                    break;
                }
                attempts += 1;
                if attempts >= MAX_REJECTION_ATTEMPTS {
                    return Err(Error::InvalidArgument(
                        "normal component has too little mass inside [0,1]^d".into(),
                    ));
                }
            }
            flat.extend_from_slice(&draw);
            labels.push(0);
        }
    }
    LabeledDataset::new(Dataset::from_flat(flat, n, d)?, labels)
}
