use crate::error::{Error, Result};

/// Subtract the baseline mean from every activity sample.
pub fn baseline_correct(activity: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    if baseline.is_empty() {
        return Err(Error::arg("empty baseline"));
    }
    let mean = baseline.iter().sum::<f64>() / baseline.len() as f64;
    Ok(activity.iter().map(|v| v - mean).collect())
}

/// Grand mean and population standard deviation of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScore {
    pub mean: f64,
    pub std: f64,
}

impl ZScore {
    pub fn fit(x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::arg("cannot z-score an empty channel"));
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !std.is_finite() || std <= 1e-12 * mean.abs().max(1.0) {
            return Err(Error::arg("zero-variance channel"));
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// Per-channel z-score over the concatenated activity of all blocks.
pub fn zscore_global(channels: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    channels
        .iter()
        .map(|ch| {
            let z = ZScore::fit(ch)?;
            Ok(ch.iter().map(|&v| z.apply(v)).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_arithmetic() {
        assert_eq!(baseline_correct(&[3.0, 4.0, 5.0], &[1.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(baseline_correct(&[2.0, 2.0], &[1.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(baseline_correct(&[0.5, -1.5], &[-1.0, 1.0]).unwrap(), vec![0.5, -1.5]);
        assert!(baseline_correct(&[1.0], &[]).is_err());
    }

    #[test]
    fn zscore_moments_and_idempotence() {
        let x: Vec<Vec<f64>> = vec![(0..1000).map(|i| (i as f64 * 0.37).sin() * 12.0 + 4.0).collect()];
        let z = zscore_global(&x).unwrap();
        let m = z[0].iter().sum::<f64>() / 1000.0;
        let s = (z[0].iter().map(|v| (v - m).powi(2)).sum::<f64>() / 1000.0).sqrt();
        assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
        let again = zscore_global(&z).unwrap();
        assert!(again[0].iter().zip(&z[0]).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn constant_channel_rejected() {
        assert!(zscore_global(&[vec![0.1; 500]]).is_err());
    }
}
