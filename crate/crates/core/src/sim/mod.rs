//! Replicated Monte Carlo experiments for the estimators and bounds.
//!
//! Every replicate is a pure function of the configuration and its index, so
//! reports are identical whatever the worker count.

mod config;
mod experiments;
mod report;
mod stats;

pub use config::{
    ExperimentConfig, ExperimentKind, ModelKind, Perturbation, PerturbationDirection, SolverSettings, Target,
    CONFIG_KEYS,
};
pub use experiments::{
    run_bias_rate_experiment, run_experiment, run_ggm_experiment, run_linear_inference_experiment,
    run_local_perturbation_experiment, run_oracle_inequality_experiment,
};
pub use report::{
    aggregate_inference, aggregate_lasso, FailureRecord, GroupAggregates, InferenceAggregates, InferenceRecord,
    LassoAggregates, LassoRecord, MonteCarloReport, Regime, ReplicateRecord, Trend, SCOPE_NOTE,
};
pub use stats::{normality_diagnostics, NormalityDiagnostics};
