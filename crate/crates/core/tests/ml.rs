mod common;

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vigil_core::ml::{
    cross_validate, rf_train, stratified_kfold, svm_train, Criterion, Forest, Matrix, MaxFeatures, Node, RfHyperParams,
    SvmHyperParams, Tree,
};
use vigil_core::{FeatureMatrix, Label, ModelSpec, TrainedModel};

/// 2 blocks x 20 trials of the easy preset.
fn fixture() -> &'static FeatureMatrix {
    static FM: OnceLock<FeatureMatrix> = OnceLock::new();
    FM.get_or_init(|| common::easy_matrix(2, 6))
}

const SVM: ModelSpec = ModelSpec::Svm(SvmHyperParams { c: 10.0, gamma: 1e-3 });
const RF: ModelSpec = ModelSpec::Rf(RfHyperParams {
    n_estimators: 6,
    max_depth: 8,
    min_samples_split: 4,
    min_samples_leaf: 2,
    max_features: MaxFeatures::Sqrt,
    criterion: Criterion::Gini,
});

fn random_problem(seed: u64, n: usize, p: usize) -> (Matrix, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = rows
        .iter()
        .map(|r| if r[0] - r[1] + rng.random_range(-0.4..0.4) > 0.0 { Label::Face } else { Label::Scene })
        .collect();
    (Matrix::from_rows(&rows), y)
}

fn check_structure(t: &Tree, hp: &RfHyperParams) -> Result<(), TestCaseError> {
    prop_assert!(t.depth() <= hp.max_depth);
    for node in &t.nodes {
        let n = node.counts().iter().sum::<u32>() as usize;
        match node {
            Node::Split { left, right, .. } => {
                prop_assert!(n >= hp.min_samples_split);
                let (l, r) = (t.nodes[*left].counts(), t.nodes[*right].counts());
                prop_assert_eq!([l[0] + r[0], l[1] + r[1]], node.counts());
            }
            Node::Leaf { .. } => prop_assert!(n >= hp.min_samples_leaf),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn forest_respects_structural_limits(
        seed in any::<u64>(),
        n_estimators in 2usize..=10,
        max_depth in 5usize..=20,
        min_samples_split in 2usize..=20,
        min_samples_leaf in 2usize..=5,
        mf in 0usize..3,
        entropy in any::<bool>(),
    ) {
        let hp = RfHyperParams {
            n_estimators,
            max_depth,
            min_samples_split,
            min_samples_leaf,
            max_features: [MaxFeatures::Auto, MaxFeatures::Sqrt, MaxFeatures::Log2][mf],
            criterion: if entropy { Criterion::Entropy } else { Criterion::Gini },
        };
        let (x, y) = random_problem(seed, 120, 6);
        let forest = rf_train(&x, &y, &hp, seed).unwrap();
        prop_assert_eq!(forest.trees.len(), n_estimators);
        for t in &forest.trees {
            check_structure(t, &hp)?;
        }
    }
}

#[test]
fn hand_traced_two_tree_forest() {
    let hp = RfHyperParams {
        n_estimators: 2,
        max_depth: 5,
        min_samples_split: 2,
        min_samples_leaf: 2,
        max_features: MaxFeatures::Auto,
        criterion: Criterion::Gini,
    };
    // tree 0: x0 <= 0.5 ? (3 face, 1 scene) : (x1 <= 2 ? (0, 2) : (2, 2))
    let t0 = Tree {
        nodes: vec![
            Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2, counts: [5, 5] },
            Node::Leaf { counts: [3, 1] },
            Node::Split { feature: 1, threshold: 2.0, left: 3, right: 4, counts: [2, 4] },
            Node::Leaf { counts: [0, 2] },
            Node::Leaf { counts: [2, 2] },
        ],
    };
    // tree 1: a single leaf (1 face, 3 scene)
    let t1 = Tree { nodes: vec![Node::Leaf { counts: [1, 3] }] };
    let forest = Forest { hp, n_features: 2, trees: vec![t0, t1], tree_seeds: vec![0, 1] };
    assert_eq!(forest.predict_proba(&[0.5, 9.0]), (0.75 + 0.25) / 2.0);
    assert_eq!(forest.predict_proba(&[0.6, 2.0]), (0.0 + 0.25) / 2.0);
    assert_eq!(forest.predict_proba(&[0.6, 2.5]), (0.5 + 0.25) / 2.0);
    assert_eq!(forest.trees[0].depth(), 2);
}

#[test]
fn planted_rule_is_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rows: Vec<Vec<f64>> = (0..400).map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<Label> = rows.iter().map(|r| if r[3] > 0.2 { Label::Face } else { Label::Scene }).collect();
    let (train, test) = rows.split_at(300);
    let hp = RfHyperParams {
        n_estimators: 10,
        max_depth: 10,
        min_samples_split: 2,
        min_samples_leaf: 2,
        max_features: MaxFeatures::Auto,
        criterion: Criterion::Entropy,
    };
    let forest = rf_train(&Matrix::from_rows(train), &y[..300], &hp, 1).unwrap();
    let correct =
        test.iter().zip(&y[300..]).filter(|(r, l)| (forest.predict_proba(r) >= 0.5) == (**l == Label::Face)).count();
    assert!(correct as f64 >= 0.95 * test.len() as f64, "{correct}/{}", test.len());

    let svm = svm_train(&Matrix::from_rows(train), &y[..300], &SvmHyperParams { c: 100.0, gamma: 0.5 }).unwrap();
    let correct = test.iter().zip(&y[300..]).filter(|(r, l)| (svm.decision(r) >= 0.0) == (**l == Label::Face)).count();
    assert!(correct as f64 >= 0.9 * test.len() as f64, "{correct}/{}", test.len());
}

#[test]
fn planted_rule_survives_cross_validation() {
    let fm = common::planted(3);
    for spec in [SVM, RF] {
        let acc = cross_validate(&fm, &spec, 2).unwrap().mean_accuracy;
        assert!(acc >= 0.95, "{spec:?}: {acc}");
    }
}

#[test]
fn cross_validation_is_deterministic_and_consistent() {
    let fm = fixture();
    for spec in [SVM, RF] {
        let a = cross_validate(fm, &spec, 3).unwrap();
        let b = cross_validate(fm, &spec, 3).unwrap();
        assert_eq!(a, b);
        let c = a.confusion;
        assert_eq!(c.tp + c.fp + c.tn + c.fn_, fm.n_rows());
        assert_eq!(a.fold_accuracy.len(), 5);
        let mean = a.fold_accuracy.iter().sum::<f64>() / 5.0;
        assert!((a.mean_accuracy - mean).abs() < 1e-15);
        assert!(a.auc >= 0.0 && a.auc <= 1.0);
        assert_eq!(a.roc.first().map(|p| (p.fpr, p.tpr)), Some((0.0, 0.0)));
        assert_eq!(a.roc.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));
    }
}

#[test]
fn model_json_round_trip_scores_bit_exactly() {
    let fm = fixture();
    let rows: Vec<usize> = (0..fm.n_rows()).collect();
    for spec in [SVM, RF] {
        let m = TrainedModel::fit(fm, &rows, &spec, 5).unwrap();
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let (s1, s2) = (m.score_rows(fm, &rows).unwrap(), back.score_rows(fm, &rows).unwrap());
        assert!(s1.iter().zip(&s2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn unsupported_model_version_rejected() {
    let fm = fixture();
    let rows: Vec<usize> = (0..fm.n_rows()).collect();
    let json = TrainedModel::fit(fm, &rows, &SVM, 0).unwrap().to_json().unwrap();
    let bumped = json.replacen("\"format_version\":1", "\"format_version\":99", 1);
    assert!(TrainedModel::from_json(&bumped).is_err());
}

#[test]
fn predictions_ignore_feature_scale() {
    let fm = fixture();
    let rows: Vec<usize> = (0..fm.n_rows()).collect();
    let train: Vec<usize> = rows.iter().copied().filter(|r| r % 4 != 0).collect();
    let test: Vec<usize> = rows.iter().copied().filter(|r| r % 4 == 0).collect();
    for a in [0.25, 8.0] {
        let mut scaled = fm.clone();
        scaled.values.iter_mut().for_each(|v| *v *= a);
        for spec in [SVM, RF] {
            let m1 = TrainedModel::fit(fm, &train, &spec, 2).unwrap();
            let m2 = TrainedModel::fit(&scaled, &train, &spec, 2).unwrap();
            let (s1, s2) = (m1.score_rows(fm, &test).unwrap(), m2.score_rows(&scaled, &test).unwrap());
            for (p, q) in s1.iter().zip(&s2) {
                assert_eq!(m1.predict(*p), m2.predict(*q), "scale {a}");
                assert!((p - q).abs() <= 1e-6 * p.abs().max(1.0), "{p} vs {q}");
            }
        }
    }
}

#[test]
fn scores_follow_row_order() {
    let fm = fixture();
    let folds = stratified_kfold(&fm.labels, 5, 9).unwrap();
    let train: Vec<usize> = (0..fm.n_rows()).filter(|r| !folds[0].contains(r)).collect();
    for spec in [SVM, RF] {
        let m = TrainedModel::fit(fm, &train, &spec, 1).unwrap();
        let s = m.score_rows(fm, &folds[0]).unwrap();
        let rev: Vec<usize> = folds[0].iter().rev().copied().collect();
        let sr = m.score_rows(fm, &rev).unwrap();
        let back: Vec<f64> = sr.into_iter().rev().collect();
        assert_eq!(s, back);
    }
}

#[test]
fn test_rows_do_not_reach_training() {
    let fm = fixture();
    let folds = stratified_kfold(&fm.labels, 5, 4).unwrap();
    let train: Vec<usize> = (0..fm.n_rows()).filter(|r| !folds[1].contains(r)).collect();
    let mut poisoned = fm.clone();
    for &r in &folds[1] {
        poisoned.row_mut(r).iter_mut().for_each(|v| *v = 1e6);
        let stride = poisoned.erp.n_channels * 50;
        poisoned.erp.data[r * stride..(r + 1) * stride].iter_mut().for_each(|v| *v = -1e6);
    }
    for spec in [SVM, RF] {
        assert_eq!(
            TrainedModel::fit(fm, &train, &spec, 3).unwrap(),
            TrainedModel::fit(&poisoned, &train, &spec, 3).unwrap()
        );
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let fm = fixture();
    let rows: Vec<usize> = (0..fm.n_rows()).collect();
    let m = TrainedModel::fit(fm, &rows, &SVM, 0).unwrap();
    let err = m.score_completed(&[0.0; 10]).unwrap_err();
    assert!(err.to_string().contains("dimension mismatch"), "{err}");
}

#[test]
fn invalid_hyperparameters_rejected() {
    let fm = fixture();
    let bad = [
        ModelSpec::Svm(SvmHyperParams { c: 0.0, gamma: 1.0 }),
        ModelSpec::Svm(SvmHyperParams { c: 1.0, gamma: 1e4 }),
        ModelSpec::Rf(RfHyperParams { n_estimators: 11, ..rf_hp() }),
        ModelSpec::Rf(RfHyperParams { min_samples_leaf: 1, ..rf_hp() }),
    ];
    for spec in bad {
        assert!(cross_validate(fm, &spec, 0).is_err(), "{spec:?}");
    }
}

fn rf_hp() -> RfHyperParams {
    match RF {
        ModelSpec::Rf(hp) => hp,
        ModelSpec::Svm(_) => unreachable!(),
    }
}
