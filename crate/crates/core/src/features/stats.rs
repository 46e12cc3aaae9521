//! Summary statistics shared by the feature families.

use crate::error::{Error, Result};

/// Moments with the zero-variance rule: skewness and excess kurtosis of a
/// sample whose variance is numerically zero are defined as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub std: f64,
    pub skew: f64,
    pub kurt: f64,
    pub energy: f64,
}

/// Relative variance below which a sample counts as constant.
const ZERO_VAR_REL: f64 = 1e-20;

impl Moments {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4, mut energy) = (0.0, 0.0, 0.0, 0.0);
        for &v in x {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
            energy += v * v;
        }
        let var = m2 / n;
        let (skew, kurt) = if var <= ZERO_VAR_REL * mean.abs().max(1.0).powi(2) {
            (0.0, 0.0)
        } else {
            (m3 / n / var.powf(1.5), m4 / n / (var * var) - 3.0)
        };
        Moments { mean, var, std: var.sqrt(), skew, kurt, energy }
    }
}

pub fn median(x: &[f64]) -> f64 {
    crate::dsp::median(x)
}

/// Sampling period of the 50 Hz ERP epochs in milliseconds.
pub const ERP_STEP_MS: u32 = 20;

/// ERP analysis windows as `[start, end)` in milliseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec(pub Vec<(u32, u32)>);

impl WindowSpec {
    pub fn standard() -> Self {
        WindowSpec(vec![(0, 50), (80, 210), (240, 350), (400, 500), (520, 630), (650, 900), (0, 1000)])
    }

    pub fn label(w: (u32, u32)) -> String {
        format!("{}-{}ms", w.0, w.1)
    }
}

pub const WINDOW_STATS: [&str; 6] = ["mean", "var", "std", "ptp", "zero_crossings", "peaks"];

/// Six statistics per window, window-major: mean, population variance,
/// population std, peak-to-peak, zero crossings, interior strict maxima.
pub fn window_stats(epoch: &[f64], windows: &WindowSpec) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(windows.0.len() * WINDOW_STATS.len());
    for &(start, end) in &windows.0 {
        let idx: Vec<usize> = (0..epoch.len())
            .filter(|&i| {
                let t = i as u32 * ERP_STEP_MS;
                start <= t && t < end
            })
            .collect();
        if idx.is_empty() {
            return Err(Error::arg(format!("window {start}-{end} ms selects no samples")));
        }
        let w = &epoch[idx[0]..=idx[idx.len() - 1]];
        let m = Moments::of(w);
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let crossings = w.windows(2).filter(|p| p[0] * p[1] < 0.0).count();
        let peaks = w.windows(3).filter(|p| p[1] > p[0] && p[1] > p[2]).count();
        out.extend([m.mean, m.var, m.std, hi - lo, crossings as f64, peaks as f64]);
    }
    Ok(out)
}
