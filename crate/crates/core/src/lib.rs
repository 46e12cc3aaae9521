//! Offline EEG decoding of sustained visual attention (face vs. scene).
//!
//! The crate is organised along the processing chain:
//!
//! ```text
//! model     recordings, dataset I/O, synthetic generator
//! dsp       Butterworth design, zero-phase filtering, despiking, smoothing,
//!           baseline correction, z-scoring, analytic envelope, Morlet CWT
//! features  ERP window statistics, per-channel LDA, time-frequency and
//!           Hilbert-envelope statistics -> 640-column trial matrix
//! ml        RBF SVM (SMO), random forest, stratified k-fold CV, ROC/AUC
//! tune      Tree-structured Parzen Estimator and study persistence
//! report    results.json, Markdown table, SVG plots
//! ```

pub mod dsp;
pub mod error;
pub mod features;
pub mod ml;
pub mod model;
pub mod report;
pub mod tune;

pub use error::{Error, Result};
pub use features::{ErpEpochs, FeatureMatrix};

pub use ml::{EvalReport, ModelKind, ModelSpec, TrainedModel};
pub use model::{BandDefinition, EpochSet, Label, Phase, Recording, SnrPreset, SynthConfig};
pub use tune::{SearchSpace, Study};
