use num_complex::Complex64;
use rustfft::FftPlanner;

use super::filtfilt::filtfilt;
use super::iir::design_butterworth_bandpass;
use crate::error::{Error, Result};
use crate::model::BandDefinition;

/// Order of the band-limiting filter applied before the envelope.
pub const ENVELOPE_FILTER_ORDER: usize = 4;

/// Analytic signal by zeroing negative frequencies and doubling positive ones.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (i, v) in buf.iter_mut().enumerate() {
        let h = if i == 0 || (n % 2 == 0 && i == half) {
            1.0
        } else if i <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= h;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Instantaneous amplitude of `x` within `band`.
pub fn analytic_envelope(x: &[f64], band: &BandDefinition, fs: f64) -> Result<Vec<f64>> {
    band.validate(fs)?;
    if x.len() < 64 {
        return Err(Error::arg(format!("envelope needs at least 64 samples, got {}", x.len())));
    }
    let filt = design_butterworth_bandpass(ENVELOPE_FILTER_ORDER, band.lo, band.hi, fs)?;
    let y = filtfilt(&filt, x)?;
    Ok(analytic_signal(&y).iter().map(|c| c.norm()).collect())
}
