//! Experiment runner: configuration, seeded multi-run statistics, the
//! learner × strategy × variant matrix, hyperparameter sweeps and trace
//! export.

mod config;
mod run;

pub use config::ExperimentConfig;
pub use run::{
    converged, emit_trace, mean_std, run_experiment, run_matrix, run_seed, sweep, trace_path,
    train_forecaster, ExperimentResult, ExperimentSummary, MatrixCell, MatrixTable, SeedRun,
    SeedSummary, SweepParameter, SweepPoint,
};
