//! Bagged regularized k-distances for unsupervised anomaly detection
//! and density estimation.
//!
//! The pipeline partitions the data into disjoint (fit, reference) bag
//! pairs, picks nearest-neighbor weights per bag by minimizing a
//! surrogate risk in closed form, and scores every point by its bagged
//! weighted distance to the reference sets. High distances mean low
//! density; the top-m scorers are flagged as anomalies.
//!
//! ```no_run
//! use brdad::{fit, Dataset, FitOptions};
//!
//! let data = Dataset::from_rows(vec![vec![0.0], vec![0.1], vec![0.2], vec![0.3], vec![5.0]])?;
//! let model = fit(&data, &FitOptions::default())?;
//! let result = model.detect(&data, 1)?;
//! assert_eq!(result.flagged(), vec![4]);
//! # Ok::<(), brdad::Error>(())
//! ```

pub mod cli;
pub mod data;
mod error;
pub mod estimator;
pub mod evaluation;
pub mod neighbors;
pub mod special;
pub mod srm;
pub mod synthetic;

pub use data::{
    apply_scale, auto_bag_count, fit_scale, load_csv, make_partition, BagPartition, Dataset,
    LabeledDataset, LoadedCsv, ScaleTransform,
};
pub use error::{Error, Result};
pub use estimator::{
    bwdde_density, fit, fit_with_partition, AnomalyScores, BagCount, BagModel, FitOptions,
};
pub use evaluation::{auc, mae, rank_table, MetricReport, ReportConfig};
pub use neighbors::{
    average_i_distances, brute_force_knn, AvgDistanceProfile, Neighbor, NeighborIndex,
};
pub use srm::{
    gamma_table, solve_srm, srm_core, surrogate_risk, unit_ball_volume, GammaTable, WeightVector,
};
pub use synthetic::{
    mixture_density, sample_huber, sample_mixture, HuberSpec, MixtureComponent, MixtureSpec,
};
