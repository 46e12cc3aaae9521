use crate::error::{Error, Result};

/// K-nearest-neighbour regression on the time index with uniform weights:
/// a centred moving average of `k` samples, truncated at the edges.
pub fn knn_smooth(x: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k % 2 == 0 || k > x.len() {
        return Err(Error::arg(format!("knn k must be odd and in 1..={}, got {k}", x.len())));
    }
    if k == 1 {
        return Ok(x.to_vec());
    }
    let half = k / 2;
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}
