//! Classifiers, fold-time feature completion, cross-validation and metrics.

mod forest;
mod metrics;
mod pipeline;
mod svm;

pub use forest::{
    best_split, bootstrap, rf_train, tree_seed, Criterion, Forest, MaxFeatures, Node, RfHyperParams, Split, Tree,
    MAX_DEPTH_RANGE, MIN_SAMPLES_LEAF_RANGE, MIN_SAMPLES_SPLIT_RANGE, N_ESTIMATORS_RANGE,
};
pub use metrics::{accuracy, roc_auc, stratified_kfold, RocPoint};
pub use pipeline::{
    completed_rows, cross_validate, Classifier, Confusion, EvalReport, ModelKind, ModelSpec, Standardizer,
    TrainedModel, MODEL_FORMAT_VERSION, N_FOLDS,
};
pub use svm::{
    kernel_matrix, rbf, smo_solve, svm_train, svm_train_detailed, SmoSolution, SvmHyperParams, SvmModel, C_RANGE,
    GAMMA_RANGE, SMO_MAX_PASSES, SMO_TOL,
};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix { rows: rows.len(), cols: self.cols, data }
    }
}
