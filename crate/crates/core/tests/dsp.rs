use std::f64::consts::PI;

use proptest::collection::vec;
use proptest::prelude::*;
use vigil_core::dsp::{
    analytic_envelope, cwt_power, design_butterworth_bandpass, despike_mad, filtfilt, knn_smooth, preprocess,
    PreprocessConfig, WaveletBank, MAX_ORDER,
};
use vigil_core::model::synthesize_with_truth;
use vigil_core::{BandDefinition, SynthConfig};

fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-100.0f64..100.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn designed_filters_are_stable(
        order in 1..=MAX_ORDER,
        lo in 0.05f64..60.0,
        width in 0.5f64..60.0,
        fs in prop::sample::select(vec![250.0, 500.0, 1000.0]),
    ) {
        let hi = (lo + width).min(0.45 * fs);
        prop_assume!(hi > lo);
        let f = design_butterworth_bandpass(order, lo, hi, fs).unwrap();
        prop_assert!(f.poles().iter().all(|p| p.norm() < 1.0));
    }

    #[test]
    fn filtfilt_is_linear(x in signal(700), y in signal(700), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let f = design_butterworth_bandpass(5, 0.4, 40.0, 250.0).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy, fm) = (filtfilt(&f, &x).unwrap(), filtfilt(&f, &y).unwrap(), filtfilt(&f, &mix).unwrap());
        let scale = 1.0 + a.abs() + b.abs();
        for i in 0..mix.len() {
            prop_assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() <= 1e-9 * 100.0 * scale);
        }
    }

    #[test]
    fn despike_touches_only_flagged(mut x in signal(300), spikes in vec((0usize..300, 500.0f64..5000.0), 0..6), a in 0.01f64..100.0) {
        for (i, amp) in spikes {
            x[i] += amp;
        }
        let (y, flagged) = despike_mad(&x, 5.0).unwrap();
        for i in 0..x.len() {
            if flagged.binary_search(&i).is_err() {
                prop_assert_eq!(y[i], x[i]);
            }
        }
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        prop_assert_eq!(despike_mad(&scaled, 5.0).unwrap().1, flagged);
    }

    #[test]
    fn smoothing_commutes_with_affine_maps(x in signal(200), k in prop::sample::select(vec![1usize, 3, 7, 15]), a in -10.0f64..10.0, b in -50.0f64..50.0) {
        let sx = knn_smooth(&x, k).unwrap();
        let t: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let st = knn_smooth(&t, k).unwrap();
        for i in 0..x.len() {
            prop_assert!((st[i] - (a * sx[i] + b)).abs() <= 1e-9 * (1.0 + a.abs() * 100.0 + b.abs()));
        }
    }

    #[test]
    fn envelope_ignores_sign(x in signal(512)) {
        let band = BandDefinition::new("alpha", 8.0, 13.0);
        let e = analytic_envelope(&x, &band, 250.0).unwrap();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let en = analytic_envelope(&neg, &band, 250.0).unwrap();
        for (p, q) in e.iter().zip(&en) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }
}

#[test]
fn cwt_peaks_at_tone_frequency() {
    let fs = 250.0;
    let bank = WaveletBank::standard(fs).unwrap();
    for f in [5.0, 10.0, 20.0, 35.0] {
        let x: Vec<f64> = (0..2000).map(|i| (2.0 * PI * f * i as f64 / fs + 1.0).cos()).collect();
        let p = cwt_power(&x, &bank).unwrap();
        let mean: Vec<f64> = p.iter().map(|row| row.iter().sum::<f64>() / row.len() as f64).collect();
        let peak = (0..mean.len()).fold(0, |b, i| if mean[i] > mean[b] { i } else { b });
        assert_eq!(bank.freqs()[peak], f);
    }
}

#[test]
fn preprocess_removes_injected_spikes_and_normalises() {
    let (rec, truth) = synthesize_with_truth(&SynthConfig { seed: 9, ..Default::default() }).unwrap();
    assert!(!truth.spikes.is_empty());
    let out = preprocess(&rec, &PreprocessConfig::default()).unwrap();
    let peak = out.recording.samples().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak <= 6.0, "peak {peak} global sds");

    assert!(out.recording.info().preprocessed);
    for ch in out.recording.samples() {
        let act: Vec<f64> =
            out.recording.blocks().iter().flat_map(|b| ch[b.activity.clone()].iter().copied()).collect();
        let n = act.len() as f64;
        let m = act.iter().sum::<f64>() / n;
        let sd = (act.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-6, "mean {m}, sd {sd}");
    }
}

#[test]
fn invalid_preprocess_config_rejected() {
    let (rec, _) =
        synthesize_with_truth(&SynthConfig { n_blocks: 2, trials_per_block: 5, ..Default::default() }).unwrap();
    for cfg in [
        PreprocessConfig { knn_k: 4, ..Default::default() },
        PreprocessConfig { mad_k: 0.0, ..Default::default() },
        PreprocessConfig { filter_hi: 200.0, ..Default::default() },
        PreprocessConfig { filter_order: 0, ..Default::default() },
    ] {
        assert!(preprocess(&rec, &cfg).is_err(), "{cfg:?}");
    }
}
