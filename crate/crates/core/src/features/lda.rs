//! Per-channel Fisher discriminant projecting a 50-sample ERP epoch to one
//! scalar.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::erp::{ErpEpochs, ERP_SAMPLES};
use crate::error::{Error, Result};
use crate::model::Label;

/// Ridge added to the within-class scatter, relative to its mean diagonal.
pub const LDA_RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaProjection {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LdaProjection {
    pub fn project(&self, epoch: &[f64]) -> f64 {
        self.weights.iter().zip(epoch).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

/// Fisher direction `w = (S_w + lambda I)^-1 (mu_face - mu_scene)` with
/// `lambda = 1e-3 * trace(S_w) / d`; the bias places the projected class means
/// symmetrically about zero, face positive.
pub fn lda_fit(epochs: &[&[f64]], labels: &[Label]) -> Result<LdaProjection> {
    if epochs.len() != labels.len() || epochs.is_empty() {
        return Err(Error::arg("LDA needs one label per epoch"));
    }
    let d = epochs[0].len();
    if epochs.iter().any(|e| e.len() != d) {
        return Err(Error::arg("LDA epochs differ in length"));
    }
    let mut mu = [DVector::<f64>::zeros(d), DVector::<f64>::zeros(d)];
    let mut count = [0usize; 2];
    let class = |l: Label| if l == Label::Face { 0 } else { 1 };
    for (e, &l) in epochs.iter().zip(labels) {
        let c = class(l);
        mu[c] += DVector::from_column_slice(e);
        count[c] += 1;
    }
    if count.contains(&0) {
        return Err(Error::arg("LDA training set contains a single class"));
    }
    for c in 0..2 {
        mu[c] /= count[c] as f64;
    }

    let mut sw = DMatrix::<f64>::zeros(d, d);
    for (e, &l) in epochs.iter().zip(labels) {
        let diff = DVector::from_column_slice(e) - &mu[class(l)];
        sw.ger(1.0, &diff, &diff, 1.0);
    }
    let lambda = LDA_RIDGE * sw.trace() / d as f64;
    for i in 0..d {
        sw[(i, i)] += lambda;
    }
    let delta = &mu[0] - &mu[1];
    let chol = sw.cholesky().ok_or_else(|| Error::Singular("within-class scatter is not positive definite".into()))?;
    let w = chol.solve(&delta);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("LDA direction is not finite".into()));
    }
    let bias = -0.5 * w.dot(&(&mu[0] + &mu[1]));
    Ok(LdaProjection { weights: w.iter().copied().collect(), bias })
}

/// Fit one projection per channel on the given trials.
pub fn lda_fit_channels(erp: &ErpEpochs, rows: &[usize]) -> Result<Vec<LdaProjection>> {
    let labels: Vec<Label> = rows.iter().map(|&r| erp.labels[r]).collect();
    (0..erp.n_channels)
        .map(|c| {
            let epochs: Vec<&[f64]> = rows.iter().map(|&r| erp.epoch(r, c)).collect();
            debug_assert!(epochs.iter().all(|e| e.len() == ERP_SAMPLES));
            lda_fit(&epochs, &labels)
        })
        .collect()
}
