//! Trial features: ERP window statistics and per-channel LDA, Morlet
//! time-frequency statistics in dB, and Hilbert band-envelope statistics.

mod erp;
mod hilbert;
mod lda;
mod matrix;
mod stats;
mod tf;

pub use erp::{erp_epochs, ErpEpochs, ERP_BAND, ERP_FS, ERP_SAMPLES};
pub use hilbert::{envelope_stats, hilbert_features, HILBERT_STATS};
pub use lda::{lda_fit, lda_fit_channels, LdaProjection, LDA_RIDGE};
pub use matrix::{
    assemble, column_names, extract, ColumnName, Extraction, FeatureMatrix, EPOCHS_FILE, FEATURES_FILE, HILBERT_OFFSET,
    LDA_OFFSET, N_ERP, N_ERP_STATS, N_FEATURES, N_HILBERT, N_LDA, N_TF, TF_MAPS_FILE, TF_OFFSET,
};
pub use stats::{median, window_stats, Moments, WindowSpec, ERP_STEP_MS, WINDOW_STATS};
pub use tf::{
    baseline_power, tf_features, tf_trial_stats, to_db, TfClassMaps, TfFeatures, MAP_BINS, POWER_FLOOR, TF_STATS,
};
