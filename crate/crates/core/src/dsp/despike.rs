use super::spline::NaturalSpline;
use crate::error::{Error, Result};

/// Gaussian consistency constant turning a MAD into a standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

pub(crate) fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Median-absolute-deviation spike detection with natural cubic spline repair.
///
/// Sample `i` is flagged when `|x[i] - median| > k * 1.4826 * MAD`. Flagged
/// samples are re-estimated from a spline through the unflagged samples;
/// flagged runs at either end take the nearest unflagged value. A zero MAD
/// flags nothing.
pub fn despike_mad(x: &[f64], k: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.len() < 8 {
        return Err(Error::arg(format!("despike needs at least 8 samples, got {}", x.len())));
    }
    if !(k > 0.0) {
        return Err(Error::arg(format!("MAD threshold must be positive, got {k}")));
    }
    let med = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&dev);
    if mad == 0.0 {
        return Ok((x.to_vec(), Vec::new()));
    }
    let limit = k * MAD_SCALE * mad;
    let flagged: Vec<usize> = dev.iter().enumerate().filter(|(_, d)| **d > limit).map(|(i, _)| i).collect();
    if flagged.is_empty() {
        return Ok((x.to_vec(), flagged));
    }
    if flagged.len() == x.len() {
        return Err(Error::arg("every sample flagged as a spike"));
    }

    let mut is_flagged = vec![false; x.len()];
    flagged.iter().for_each(|&i| is_flagged[i] = true);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        x.iter().enumerate().filter(|(i, _)| !is_flagged[*i]).map(|(i, v)| (i as f64, *v)).unzip();
    let first = xs[0] as usize;
    let last = *xs.last().unwrap() as usize;
    let (first_val, last_val) = (ys[0], *ys.last().unwrap());
    let spline = (xs.len() >= 2).then(|| NaturalSpline::new(xs, ys));

    let mut out = x.to_vec();
    for &i in &flagged {
        out[i] = if i < first {
            first_val
        } else if i > last {
            last_val
        } else {
            spline.as_ref().map_or(first_val, |s| s.eval(i as f64))
        };
    }
    Ok((out, flagged))
}
