//! Soft-margin RBF support vector machine trained with SMO.
//!
//! The dual `min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a <= C` is solved by
//! repeatedly optimizing the maximal violating pair: the index in the "up"
//! set with the largest `-y G` and the index in the "low" set with the
//! smallest, which is the pair maximizing `|E1 - E2|`. The kernel matrix is
//! computed once and cached.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::model::Label;

pub const SMO_TOL: f64 = 1e-3;
pub const SMO_MAX_PASSES: usize = 10_000;
pub const C_RANGE: (f64, f64) = (1e-3, 1e3);
pub const GAMMA_RANGE: (f64, f64) = (1e-3, 1e3);

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperParams {
    pub c: f64,
    pub gamma: f64,
}

impl SvmHyperParams {
    pub fn validate(&self) -> Result<()> {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        if !inside(self.c, C_RANGE) || !inside(self.gamma, GAMMA_RANGE) {
            return Err(Error::arg(format!("SVM hyperparameters out of range: C={} gamma={}", self.c, self.gamma)));
        }
        Ok(())
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Dense symmetric RBF kernel matrix, row-major.
pub fn kernel_matrix(x: &Matrix, gamma: f64) -> Vec<f64> {
    let n = x.rows();
    let mut k = vec![0.0; n * n];
    k.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rbf(x.row(i), x.row(j), gamma);
        }
    });
    k
}

#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// `f(x) = sum a_i y_i k(x_i, x) + bias`
    pub bias: f64,
    pub iterations: usize,
    /// Dual objective in maximization form, `sum a - 1/2 a'Qa`.
    pub objective: f64,
}

/// SMO on a precomputed kernel. `y` holds +1/-1.
pub fn smo_solve(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<SmoSolution> {
    let n = y.len();
    assert_eq!(kernel.len(), n * n);
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap;
    loop {
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > g_max {
                i = t;
                g_max = v;
            }
            if low(alpha[t], y[t]) && v < g_min {
                j = t;
                g_min = v;
            }
        }
        gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap < tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, violation: gap });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }

    // bias: mean of y G over free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    let objective = alpha.iter().sum::<f64>() - 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g + 1.0)).sum::<f64>();
    Ok(SmoSolution { alpha, bias: -rho, iterations, objective })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub c: f64,
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, a)| a * rbf(sv, x, self.gamma)).sum::<f64>()
            + self.bias
    }

    pub fn n_features(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }
}

pub(crate) fn check_two_classes(y: &[Label], min_per_class: usize) -> Result<()> {
    let face = y.iter().filter(|l| **l == Label::Face).count();
    let scene = y.len() - face;
    if face < min_per_class || scene < min_per_class {
        return Err(Error::arg(format!(
            "need at least {min_per_class} samples per class, got {face} face / {scene} scene"
        )));
    }
    Ok(())
}

/// Train on rows of `x`; returns the model and the raw dual solution.
pub fn svm_train_detailed(x: &Matrix, y: &[Label], hp: &SvmHyperParams) -> Result<(SvmModel, SmoSolution)> {
    hp.validate()?;
    if x.rows() != y.len() {
        return Err(Error::arg("row count differs from label count"));
    }
    check_two_classes(y, 2)?;
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("non-finite training features"));
    }
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let k = kernel_matrix(x, hp.gamma);
    let sol = smo_solve(&k, &ys, hp.c, SMO_TOL, SMO_MAX_PASSES * x.rows())?;
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x.row(i).to_vec());
            dual_coef.push(a * ys[i]);
        }
    }
    Ok((SvmModel { c: hp.c, gamma: hp.gamma, support_vectors, dual_coef, bias: sol.bias }, sol))
}

pub fn svm_train(x: &Matrix, y: &[Label], hp: &SvmHyperParams) -> Result<SvmModel> {
    svm_train_detailed(x, y, hp).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn clusters(seed: u64) -> (Matrix, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let (cx, l) = if i % 2 == 0 { (2.0, Label::Face) } else { (-2.0, Label::Scene) };
            rows.push(vec![cx + rng.random_range(-0.8..0.8), rng.random_range(-1.0..1.0)]);
            y.push(l);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn separable_clusters_fit_exactly() {
        let (x, y) = clusters(5);
        let m = svm_train(&x, &y, &SvmHyperParams { c: 10.0, gamma: 0.5 }).unwrap();
        for i in 0..x.rows() {
            assert_eq!(m.decision(x.row(i)) > 0.0, y[i] == Label::Face);
        }
    }

    #[test]
    fn far_point_scores_bias() {
        let (x, y) = clusters(6);
        let m = svm_train(&x, &y, &SvmHyperParams { c: 10.0, gamma: 0.5 }).unwrap();
        assert!((m.decision(&[1e3, 1e3]) - m.bias).abs() < 1e-12);
    }

    #[test]
    fn dual_feasibility() {
        let (x, y) = clusters(7);
        let (m, sol) = svm_train_detailed(&x, &y, &SvmHyperParams { c: 1.0, gamma: 2.0 }).unwrap();
        let s: f64 = m.dual_coef.iter().sum();
        assert!(s.abs() < 1e-6);
        assert!(sol.alpha.iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = clusters(8);
        let y = vec![Label::Face; x.rows()];
        assert!(svm_train(&x, &y, &SvmHyperParams { c: 1.0, gamma: 1.0 }).is_err());
    }

    #[test]
    fn hyperparameter_bounds() {
        assert!(SvmHyperParams { c: 1e-4, gamma: 1.0 }.validate().is_err());
        assert!(SvmHyperParams { c: 1.0, gamma: 2e3 }.validate().is_err());
        assert!(SvmHyperParams { c: 1e3, gamma: 1e-3 }.validate().is_ok());
    }
}
