use proptest::prelude::*;
use vigil_core::dsp::{preprocess, PreprocessConfig, WaveletBank};
use vigil_core::features::{
    erp_epochs, extract, hilbert_features, lda_fit, tf_features, HILBERT_OFFSET, LDA_OFFSET, N_FEATURES, TF_OFFSET,
};
use vigil_core::model::synthesize;
use vigil_core::{BandDefinition, FeatureMatrix, Label, Recording, SnrPreset, SynthConfig};

fn small_rec(seed: u64, n_blocks: usize) -> Recording {
    let rec = synthesize(&SynthConfig { n_blocks, trials_per_block: 6, seed, ..Default::default() }).unwrap();
    preprocess(&rec, &PreprocessConfig::default()).unwrap().recording
}

fn scaled(rec: &Recording, a: f64) -> Recording {
    rec.with_samples(rec.samples().iter().map(|c| c.iter().map(|v| a * v).collect()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn column_count_independent_of_blocks(half in 1usize..=3, seed in 0u64..1000) {
        let rec = small_rec(seed, 2 * half);
        let fm = extract(&rec, &BandDefinition::standard()).unwrap().matrix;
        prop_assert_eq!(fm.n_cols(), N_FEATURES);
        prop_assert_eq!((LDA_OFFSET, TF_OFFSET - LDA_OFFSET, HILBERT_OFFSET - TF_OFFSET), (336, 8, 56));
        prop_assert_eq!(N_FEATURES - HILBERT_OFFSET, 240);
        prop_assert_eq!(fm.n_rows(), 2 * half * 6);
        prop_assert!(fm.values.iter().all(|v| v.is_finite()));
    }

    // scales keep every power well above the dB floor
    #[test]
    fn db_features_ignore_signal_scale(a in prop::sample::select(vec![0.5, 3.0, 250.0])) {
        let rec = small_rec(17, 2);
        let bank = WaveletBank::standard(rec.fs() as f64).unwrap();
        let base = tf_features(&rec, &bank).unwrap();
        let other = tf_features(&scaled(&rec, a), &bank).unwrap();
        for (r1, r2) in base.rows.iter().zip(&other.rows) {
            for (x, y) in r1.iter().zip(r2) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }
        for (m1, m2) in base.maps.face.iter().flatten().flatten().zip(other.maps.face.iter().flatten().flatten()) {
            prop_assert!((m1 - m2).abs() <= 1e-9 * m1.abs().max(1.0));
        }
    }
}

#[test]
fn hilbert_features_ignore_sign() {
    let rec = small_rec(5, 2);
    let bands = BandDefinition::standard();
    let a = hilbert_features(&rec, &bands).unwrap();
    let b = hilbert_features(&scaled(&rec, -1.0), &bands).unwrap();
    for (r1, r2) in a.iter().zip(&b) {
        for (x, y) in r1.iter().zip(r2) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn lda_sign_pattern_survives_scaling() {
    let rec = {
        let raw = synthesize(&SynthConfig { snr_preset: SnrPreset::Hard, seed: 8, ..Default::default() }).unwrap();
        preprocess(&raw, &PreprocessConfig::default()).unwrap().recording
    };
    let erp = erp_epochs(&rec).unwrap();
    for ch in [0, 5, 7] {
        let epochs: Vec<&[f64]> = (0..erp.n_trials).map(|t| erp.epoch(t, ch)).collect();
        let p = lda_fit(&epochs, &erp.labels).unwrap();
        let signs: Vec<bool> = epochs.iter().map(|e| p.project(e) > 0.0).collect();
        for a in [0.1, 2.0, 10.0] {
            let owned: Vec<Vec<f64>> = epochs.iter().map(|e| e.iter().map(|v| a * v).collect()).collect();
            let refs: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
            let q = lda_fit(&refs, &erp.labels).unwrap();
            let s: Vec<bool> = refs.iter().map(|e| q.project(e) > 0.0).collect();
            assert_eq!(s, signs, "channel {ch}, scale {a}");
        }
        // the projection separates the training classes better than chance
        let correct = signs.iter().zip(&erp.labels).filter(|(s, l)| **s == (**l == Label::Face)).count();
        assert!(correct * 2 > erp.n_trials, "channel {ch}: {correct}/{}", erp.n_trials);
    }
}

#[test]
fn lda_rejects_single_class() {
    let e = [vec![1.0, 2.0], vec![2.0, 1.0]];
    let refs: Vec<&[f64]> = e.iter().map(Vec::as_slice).collect();
    assert!(lda_fit(&refs, &[Label::Face, Label::Face]).is_err());
}

#[test]
fn feature_directory_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let fm = extract(&small_rec(3, 2), &BandDefinition::standard()).unwrap().matrix;
    let dir = tmp.path().join(&fm.subject_id);
    fm.write(&dir).unwrap();
    let back = FeatureMatrix::read(&dir).unwrap();
    assert_eq!(back, fm);
}

#[test]
fn band_list_is_validated() {
    let rec = small_rec(4, 2);
    let mut bands = BandDefinition::standard();
    bands.pop();
    assert!(extract(&rec, &bands).is_err());
    bands.push(BandDefinition::new("gamma", 30.0, 200.0));
    assert!(extract(&rec, &bands).is_err());
}
