//! Fold-time feature completion, standardization and the trained-model
//! artifact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{rf_train, Forest, RfHyperParams};
use super::metrics::{accuracy, roc_auc, stratified_kfold, RocPoint};
use super::svm::{svm_train, SvmHyperParams, SvmModel};
use super::Matrix;
use crate::error::{Error, Result};
use crate::features::{lda_fit_channels, ErpEpochs, FeatureMatrix, LdaProjection, LDA_OFFSET, N_LDA};
use crate::model::Label;

pub const N_FOLDS: usize = 5;
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Test indices, their decision scores and the fold accuracy.
type FoldOutcome = (Vec<usize>, Vec<f64>, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Rf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Rf => "rf",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "svm" => Ok(ModelKind::Svm),
            "rf" => Ok(ModelKind::Rf),
            _ => Err(format!("unknown model kind {s:?}")),
        }
    }
}

/// Model kind plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Svm(SvmHyperParams),
    Rf(RfHyperParams),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Svm(_) => ModelKind::Svm,
            ModelSpec::Rf(_) => ModelKind::Rf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Svm(hp) => hp.validate(),
            ModelSpec::Rf(hp) => hp.validate(),
        }
    }
}

/// Per-column `(x - mean) / std`; zero-variance columns keep `std = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let mut mean = vec![0.0; p];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 && sd > 1e-12 * m.abs() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    Svm(SvmModel),
    Rf(Forest),
}

/// Everything needed to score a raw feature row: the per-channel LDA
/// projections that fill the LDA columns, the column standardizer and the
/// classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub lda: Vec<LdaProjection>,
    pub scaler: Standardizer,
    pub classifier: Classifier,
}

/// Rows `rows` of `fm` with the LDA columns filled from `lda`.
pub fn completed_rows(fm: &FeatureMatrix, rows: &[usize], lda: &[LdaProjection]) -> Matrix {
    let p = fm.n_cols();
    let mut data = Vec::with_capacity(rows.len() * p);
    for &r in rows {
        let start = data.len();
        data.extend_from_slice(fm.row(r));
        fill_lda(&mut data[start..], &fm.erp, r, lda);
    }
    Matrix::new(rows.len(), p, data)
}

fn fill_lda(row: &mut [f64], erp: &ErpEpochs, trial: usize, lda: &[LdaProjection]) {
    for (c, proj) in lda.iter().enumerate().take(N_LDA) {
        row[LDA_OFFSET + c] = proj.project(erp.epoch(trial, c));
    }
}

impl TrainedModel {
    /// Fit LDA, standardizer and classifier on `rows` of `fm`.
    pub fn fit(fm: &FeatureMatrix, rows: &[usize], spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let lda = lda_fit_channels(&fm.erp, rows)?;
        let mut x = completed_rows(fm, rows, &lda);
        let scaler = Standardizer::fit(&x);
        for i in 0..x.rows() {
            scaler.apply(x.row_mut(i));
        }
        let y: Vec<Label> = rows.iter().map(|&r| fm.labels[r]).collect();
        let classifier = match spec {
            ModelSpec::Svm(hp) => Classifier::Svm(svm_train(&x, &y, hp)?),
            ModelSpec::Rf(hp) => Classifier::Rf(rf_train(&x, &y, hp, seed)?),
        };
        Ok(TrainedModel { format_version: MODEL_FORMAT_VERSION, spec: *spec, lda, scaler, classifier })
    }

    pub fn n_features(&self) -> usize {
        self.scaler.mean.len()
    }

    /// Scores at or above this value are predicted face.
    pub fn threshold(&self) -> f64 {
        match self.classifier {
            Classifier::Svm(_) => 0.0,
            Classifier::Rf(_) => 0.5,
        }
    }

    /// SVM margin or RF face probability of an already completed (LDA-filled)
    /// raw feature row.
    pub fn score_completed(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::arg(format!(
                "dimension mismatch: model expects {} features, got {}",
                self.n_features(),
                row.len()
            )));
        }
        let mut z = row.to_vec();
        self.scaler.apply(&mut z);
        Ok(match &self.classifier {
            Classifier::Svm(m) => m.decision(&z),
            Classifier::Rf(f) => f.predict_proba(&z),
        })
    }

    /// Scores of rows `rows` of `fm`, LDA columns filled by this model.
    pub fn score_rows(&self, fm: &FeatureMatrix, rows: &[usize]) -> Result<Vec<f64>> {
        let x = completed_rows(fm, rows, &self.lda);
        (0..x.rows()).map(|i| self.score_completed(x.row(i))).collect()
    }

    pub fn predict(&self, score: f64) -> Label {
        if score >= self.threshold() {
            Label::Face
        } else {
            Label::Scene
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::arg(format!("unsupported model format version {}", m.format_version)));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    /// Face predicted face.
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: ModelSpec,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub confusion: Confusion,
}

/// Stratified 5-fold cross-validation. Each fold fits its own LDA
/// projections and standardizer on the training rows only; test scores are
/// pooled for the ROC.
pub fn cross_validate(fm: &FeatureMatrix, spec: &ModelSpec, seed: u64) -> Result<EvalReport> {
    spec.validate()?;
    let folds = stratified_kfold(&fm.labels, N_FOLDS, seed)?;
    let n = fm.n_rows();
    let outcomes: Vec<Result<FoldOutcome>> = folds
        .par_iter()
        .enumerate()
        .map(|(k, test)| {
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let wrap = |e| Error::Fold { fold: k, source: Box::new(e) };
            let model = TrainedModel::fit(fm, &train, spec, seed.wrapping_add(k as u64)).map_err(wrap)?;
            let scores = model.score_rows(fm, test).map_err(wrap)?;
            Ok((test.clone(), scores, model.threshold()))
        })
        .collect();

    let mut fold_accuracy = Vec::with_capacity(N_FOLDS);
    let (mut all_scores, mut all_labels) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut confusion = Confusion::default();
    for outcome in outcomes {
        let (test, scores, threshold) = outcome?;
        let truth: Vec<Label> = test.iter().map(|&i| fm.labels[i]).collect();
        let pred: Vec<Label> =
            scores.iter().map(|&s| if s >= threshold { Label::Face } else { Label::Scene }).collect();
        for (p, t) in pred.iter().zip(&truth) {
            match (p, t) {
                (Label::Face, Label::Face) => confusion.tp += 1,
                (Label::Face, Label::Scene) => confusion.fp += 1,
                (Label::Scene, Label::Scene) => confusion.tn += 1,
                (Label::Scene, Label::Face) => confusion.fn_ += 1,
            }
        }
        fold_accuracy.push(accuracy(&pred, &truth));
        all_scores.extend(scores);
        all_labels.extend(truth);
    }
    let (roc, auc) = roc_auc(&all_scores, &all_labels)?;
    let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
    Ok(EvalReport { spec: *spec, fold_accuracy, mean_accuracy, roc, auc, confusion })
}
