use std::fs;
use std::path::Path;

use proptest::prelude::*;
use vigil_core::model::{
    load_recording, synthesize, synthesize_with_truth, write_recording, CHANNELS, META_FILE, RECORDING_FILE,
};
use vigil_core::{Error, Label, SnrPreset, SynthConfig};

fn small(seed: u64, preset: SnrPreset) -> SynthConfig {
    SynthConfig { n_blocks: 2, trials_per_block: 6, seed, snr_preset: preset, ..Default::default() }
}

fn dir_bytes(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    (fs::read(dir.join(META_FILE)).unwrap(), fs::read(dir.join(RECORDING_FILE)).unwrap())
}

#[test]
fn identical_config_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(11, SnrPreset::Easy);
    write_recording(&synthesize(&cfg).unwrap(), tmp.path().join("a")).unwrap();
    write_recording(&synthesize(&cfg).unwrap(), tmp.path().join("b")).unwrap();
    assert_eq!(dir_bytes(&tmp.path().join("a")), dir_bytes(&tmp.path().join("b")));

    let other = synthesize(&small(12, SnrPreset::Easy)).unwrap();
    assert_ne!(other.samples(), synthesize(&cfg).unwrap().samples());
}

#[test]
fn write_load_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let rec = synthesize(&small(5, SnrPreset::Hard)).unwrap();
    write_recording(&rec, tmp.path()).unwrap();
    let back = load_recording(tmp.path()).unwrap();
    assert_eq!(back.subject_id(), rec.subject_id());
    assert_eq!(back.annotations(), rec.annotations());
    assert_eq!(back.info(), rec.info());
    for (a, b) in rec.samples().iter().zip(back.samples()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }
    // a second write of the loaded recording reproduces the files
    write_recording(&back, tmp.path().join("again")).unwrap();
    assert_eq!(dir_bytes(tmp.path()), dir_bytes(&tmp.path().join("again")));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn labels_balanced(half in 1usize..=4, tpb in 5usize..=12, seed in any::<u64>()) {
        let cfg = SynthConfig { n_blocks: 2 * half, trials_per_block: tpb, seed, ..Default::default() };
        let rec = synthesize(&cfg).unwrap();
        let labels = rec.trial_labels();
        prop_assert_eq!(labels.len(), 2 * half * tpb);
        let faces = labels.iter().filter(|l| **l == Label::Face).count();
        prop_assert_eq!(faces, half * tpb);
        prop_assert_eq!(rec.blocks().len(), 2 * half);
    }
}

/// Welch t statistic of face minus scene trial values.
fn welch_t(face: &[f64], scene: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0), n)
    };
    let ((m1, v1, n1), (m2, v2, n2)) = (stats(face), stats(scene));
    (m1 - m2) / (v1 / n1 + v2 / n2).sqrt()
}

/// Mean of PO7 and PO8 over 150-200 ms after onset, per trial and class.
fn n170_amplitudes(preset: SnrPreset) -> (Vec<f64>, Vec<f64>) {
    let rec = synthesize(&SynthConfig { snr_preset: preset, seed: 21, ..Default::default() }).unwrap();
    let ep = rec.epochs();
    let fs = ep.fs as usize;
    let (po7, po8) = (5, 7);
    assert_eq!((CHANNELS[po7], CHANNELS[po8]), ("PO7", "PO8"));
    let win = fs * 150 / 1000..fs * 200 / 1000;
    let (mut face, mut scene) = (Vec::new(), Vec::new());
    for t in 0..ep.n_trials {
        let v = [po7, po8].iter().map(|&c| ep.epoch(t, c)[win.clone()].iter().sum::<f64>()).sum::<f64>()
            / (2 * win.len()) as f64;
        if ep.labels[t] == Label::Face {
            face.push(v)
        } else {
            scene.push(v)
        }
    }
    (face, scene)
}

#[test]
fn easy_preset_carries_face_negativity() {
    let (face, scene) = n170_amplitudes(SnrPreset::Easy);
    let t = welch_t(&face, &scene);
    assert!(t < -5.0, "t = {t}");
}

#[test]
fn null_preset_has_no_class_effect() {
    let (face, scene) = n170_amplitudes(SnrPreset::Null);
    let t = welch_t(&face, &scene);
    assert!(t.abs() < 3.5, "t = {t}");
}

#[test]
fn truth_lists_spikes_within_bounds() {
    let (rec, truth) = synthesize_with_truth(&SynthConfig { seed: 4, ..Default::default() }).unwrap();
    assert!(!truth.spikes.is_empty());
    assert!(truth.spikes.iter().all(|&(c, s)| c < rec.n_channels() && s < rec.len()));
}

#[test]
fn missing_dataset_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let err = load_recording(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains(META_FILE), "{err}");
}

fn corrupt(edit: impl FnOnce(&Path)) -> Error {
    let tmp = tempfile::tempdir().unwrap();
    write_recording(&synthesize(&small(2, SnrPreset::Easy)).unwrap(), tmp.path()).unwrap();
    edit(tmp.path());
    load_recording(tmp.path()).unwrap_err()
}

#[test]
fn malformed_meta_is_a_parse_error() {
    let err = corrupt(|d| fs::write(d.join(META_FILE), "{ not json").unwrap());
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
}

#[test]
fn dropped_channel_column_is_reported() {
    let err = corrupt(|d| {
        let text = fs::read_to_string(d.join(RECORDING_FILE)).unwrap();
        let cut: String = text
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(3);
                f.join(",") + "\n"
            })
            .collect();
        fs::write(d.join(RECORDING_FILE), cut).unwrap();
    });
    assert!(err.to_string().contains("channel-count mismatch"), "{err}");
}

#[test]
fn bad_value_reports_its_line() {
    let err = corrupt(|d| {
        let text = fs::read_to_string(d.join(RECORDING_FILE)).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut f: Vec<String> = lines[9].split(',').map(String::from).collect();
        f[2] = "abc".into();
        lines[9] = f.join(",");
        fs::write(d.join(RECORDING_FILE), lines.join("\n") + "\n").unwrap();
    });
    assert!(matches!(err, Error::Parse { line: 10, .. }), "{err}");
}

#[test]
fn truncated_block_is_rejected() {
    let err = corrupt(|d| {
        let text = fs::read_to_string(d.join(RECORDING_FILE)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let keep = lines.len() - 3000;
        fs::write(d.join(RECORDING_FILE), lines[..keep].join("\n") + "\n").unwrap();
    });
    assert!(matches!(err, Error::Schema { .. }), "{err}");
}
