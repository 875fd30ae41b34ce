//! Cross-validation, noise sweeps and hold-out prediction experiments.

mod cv;
mod experiments;
mod report;

pub use cv::{cross_validate, fold_assignment, has_tunables, CvCell, CvPlan, CvResult, LAMBDA_GRID};
pub use experiments::{run_noise_sweep, run_prediction_experiment, split_items, NoiseKind, RunOptions, SweepGrid};
pub use report::{Aggregate, ExperimentRecord, ExperimentReport, Summary, REPORT_COLUMNS};
