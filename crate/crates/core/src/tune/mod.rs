//! Hyperparameter search: search spaces, TPE sampling, studies persisted as
//! JSON lines.

mod space;
mod study;
mod tpe;

pub use space::{params_from_spec, spec_from_params, Dimension, ParamValue, Params, SearchSpace};
pub use study::{
    compare_random, load_trials, optimize, run_study, Sampler, Study, Trial, TrialStatus, MIN_COMPARE_BUDGET,
};
pub use tpe::{
    sample_prior, tpe_suggest, trial_rng, Parzen, TpeConfig, BANDWIDTH_FLOOR, DENSITY_FLOOR, GAMMA, N_CANDIDATES,
    N_STARTUP,
};
