//! Numeric kernels and the preprocessing chain.

mod despike;
mod filtfilt;
mod hilbert;
mod iir;
mod normalize;
mod preprocess;
mod smooth;
mod spline;
mod wavelet;

pub(crate) use despike::median;
pub use despike::{despike_mad, MAD_SCALE};
pub use filtfilt::filtfilt;
pub use hilbert::{analytic_envelope, analytic_signal, ENVELOPE_FILTER_ORDER};
pub use iir::{design_butterworth_bandpass, Biquad, IirFilter, MAX_ORDER};
pub use normalize::{baseline_correct, zscore_global, ZScore};
pub use preprocess::{preprocess, PreprocessConfig, PreprocessOutput};
pub use smooth::knn_smooth;
pub use spline::NaturalSpline;
pub use wavelet::{build_wavelet_bank, cwt_power, WaveletBank, SUPPORT_SIGMAS};
