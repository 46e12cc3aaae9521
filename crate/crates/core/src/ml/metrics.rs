use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Label;

/// One ROC operating point, `(false positive rate, true positive rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Threshold sweep over distinct scores in descending order, face positive.
/// AUC is the Mann-Whitney statistic with ties counted one half, computed in
/// integers and divided once.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::arg("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::arg("NaN score"));
    }
    let pos = labels.iter().filter(|l| **l == Label::Face).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::arg("ROC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area, in units of 1/(P N)
    let mut area2: u128 = 0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (mut gp, mut gn) = (0u64, 0u64);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == Label::Face {
                gp += 1;
            } else {
                gn += 1;
            }
            k += 1;
        }
        area2 += gn as u128 * (2 * tp + gp) as u128;
        tp += gp;
        fp += gn;
        points.push(RocPoint { fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 });
    }
    let auc = area2 as f64 / (2 * pos as u128 * neg as u128) as f64;
    Ok((points, auc))
}

/// `k` disjoint test-index sets. Each class is shuffled with a seeded RNG and
/// dealt round-robin, continuing the deal across classes, so every fold's
/// class counts are within one of the global proportion.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::arg("k-fold needs k >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [Label::Face, Label::Scene] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::arg(format!("class {class} has {} samples, fewer than k = {k}", idx.len())));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(folds)
}

pub fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    let hit = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    hit as f64 / truth.len().max(1) as f64
}
