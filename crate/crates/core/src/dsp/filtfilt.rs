use super::iir::IirFilter;
use crate::error::{Error, Result};

/// Zero-phase forward-backward filtering with mirror-reflection padding and
/// steady-state initial conditions.
///
/// The input must be longer than three times the filter's effective impulse
/// length. The padding covers the slowest pole's decay when the signal is long
/// enough to reflect that far, and is never shorter than the minimum length.
pub fn filtfilt(f: &IirFilter, x: &[f64]) -> Result<Vec<f64>> {
    let min_pad = 3 * f.effective_len();
    let n = x.len();
    if n <= min_pad {
        return Err(Error::arg(format!("signal of {n} samples too short for filtfilt (needs > {min_pad})")));
    }
    let pad = f.decay_len().clamp(min_pad, n - 1);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| x[i]));
    ext.extend_from_slice(x);
    ext.extend((n - pad - 1..n - 1).rev().map(|i| x[i]));

    let zi = f.step_state();
    let scaled = |z: &[[f64; 2]], v: f64| -> Vec<[f64; 2]> { z.iter().map(|s| [s[0] * v, s[1] * v]).collect() };

    let fwd = f.apply(&ext, Some(&scaled(&zi, ext[0])));
    let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
    let rev0 = rev[0];
    rev = f.apply(&rev, Some(&scaled(&zi, rev0)));
    rev.reverse();
    Ok(rev[pad..pad + n].to_vec())
}
