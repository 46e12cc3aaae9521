//! Synthetic EEG with the block protocol of the attention task.
//!
//! Each block is a 5 s cue, a 7 s grey baseline, `trials_per_block` one-second
//! stimulus trials, then 10 s of rest. Background activity is pink noise plus
//! a little white noise; every trial carries a generic visual evoked response.
//! Face blocks add an N170-like negativity on PO7/PO8 and a theta burst, scene
//! blocks add an occipital alpha burst. The `null` preset drops both class
//! effects, so the classes are statistically identical.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Annotations, Label, Phase, Recording, RecordingInfo, SnrPreset, SynthConfig, CHANNELS};
use crate::error::Result;

const CUE_S: usize = 5;
const BASELINE_S: usize = 7;
const REST_S: usize = 10;

const BACKGROUND_UV: f64 = 10.0;
const WHITE_UV: f64 = 2.0;
const SPIKE_RATE: f64 = 1e-4;
const SPIKE_GAIN: (f64, f64) = (8.0, 15.0);
const RELEVANT_FRACTION: f64 = 0.9;

// channel indices
const FZ: usize = 0;
const PZ: usize = 4;
const PO7: usize = 5;
const OZ: usize = 6;
const PO8: usize = 7;

/// Ground truth the generator knows but the recording does not carry.
#[derive(Debug, Clone, Default)]
pub struct SynthTruth {
    /// `(channel, sample)` of every injected spike.
    pub spikes: Vec<(usize, usize)>,
}

fn class_gain(preset: SnrPreset) -> f64 {
    match preset {
        SnrPreset::Easy => 1.0,
        SnrPreset::Hard => 0.35,
        SnrPreset::Null => 0.0,
    }
}

pub fn synthesize(cfg: &SynthConfig) -> Result<Recording> {
    synthesize_with_truth(cfg).map(|(rec, _)| rec)
}

pub fn synthesize_with_truth(cfg: &SynthConfig) -> Result<(Recording, SynthTruth)> {
    cfg.validate()?;
    let fs = cfg.fs as usize;
    let n_ch = CHANNELS.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut block_labels: Vec<Label> =
        (0..cfg.n_blocks).map(|b| if b < cfg.n_blocks / 2 { Label::Face } else { Label::Scene }).collect();
    block_labels.shuffle(&mut rng);

    let mut ann = Annotations::default();
    for (b, &label) in block_labels.iter().enumerate() {
        let b = b as u8;
        for _ in 0..CUE_S * fs {
            ann.push(b, Phase::Cue, None, None);
        }
        for _ in 0..BASELINE_S * fs {
            ann.push(b, Phase::Baseline, None, None);
        }
        for t in 0..cfg.trials_per_block {
            for _ in 0..fs {
                ann.push(b, Phase::Activity, Some(t as u16), Some(label));
            }
        }
        for _ in 0..REST_S * fs {
            ann.push(b, Phase::Rest, None, None);
        }
    }
    let n = ann.len();

    let mut samples: Vec<Vec<f64>> = (0..n_ch).map(|_| background(&mut rng, n)).collect();
    for ch in samples.iter_mut() {
        let offset = rng.random_range(-20.0..20.0);
        ch.iter_mut().for_each(|v| *v += offset);
    }

    let gain = class_gain(cfg.snr_preset);
    let block_len = (CUE_S + BASELINE_S + REST_S) * fs + cfg.trials_per_block * fs;
    for (b, &label) in block_labels.iter().enumerate() {
        let act_start = b * block_len + (CUE_S + BASELINE_S) * fs;
        for t in 0..cfg.trials_per_block {
            let start = act_start + t * fs;
            add_trial_response(&mut samples, start, fs, label, gain, &mut rng);
        }
    }

    let mut truth = SynthTruth::default();
    for (c, ch) in samples.iter_mut().enumerate() {
        let sd = std_dev(ch);
        for (i, v) in ch.iter_mut().enumerate() {
            if rng.random::<f64>() < SPIKE_RATE {
                let amp = rng.random_range(SPIKE_GAIN.0..SPIKE_GAIN.1) * sd;
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                *v += sign * amp;
                truth.spikes.push((c, i));
            }
        }
    }

    let info = RecordingInfo {
        snr_preset: Some(cfg.snr_preset),
        seed: Some(cfg.seed),
        relevant_fraction: Some(RELEVANT_FRACTION),
        preprocessed: false,
    };
    let rec = Recording::new(
        format!("synth-{}", cfg.seed),
        cfg.fs,
        CHANNELS.iter().map(|c| c.to_string()).collect(),
        samples,
        ann,
        cfg.trials_per_block,
        info,
    )?;
    Ok((rec, truth))
}

/// Pink (1/f) noise from white Gaussian input via Kellet's filter, scaled to
/// [`BACKGROUND_UV`], plus a white floor.
fn background(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let mut out: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        let w: f64 = StandardNormal.sample(rng);
        b[0] = 0.99886 * b[0] + w * 0.0555179;
        b[1] = 0.99332 * b[1] + w * 0.0750759;
        b[2] = 0.96900 * b[2] + w * 0.1538520;
        b[3] = 0.86650 * b[3] + w * 0.3104856;
        b[4] = 0.55000 * b[4] + w * 0.5329522;
        b[5] = -0.7616 * b[5] - w * 0.0168980;
        let pink = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
        b[6] = w * 0.115926;
        out.push(pink);
    }
    let sd = std_dev(&out);
    let mean = out.iter().sum::<f64>() / n as f64;
    for v in out.iter_mut() {
        let white: f64 = StandardNormal.sample(rng);
        *v = (*v - mean) / sd * BACKGROUND_UV + white * WHITE_UV;
    }
    out
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn gauss(t: f64, mu: f64, sigma: f64) -> f64 {
    (-(t - mu).powi(2) / (2.0 * sigma * sigma)).exp()
}

fn add_trial_response(
    samples: &mut [Vec<f64>],
    start: usize,
    fs: usize,
    label: Label,
    gain: f64,
    rng: &mut ChaCha8Rng,
) {
    // generic visual evoked response, identical for both classes
    let occipital = [(PO7, 1.0), (OZ, 1.0), (PO8, 1.0), (PZ, 0.6)];
    for k in 0..fs {
        let t = k as f64 / fs as f64;
        let vep = 3.0 * gauss(t, 0.10, 0.02) - 2.0 * gauss(t, 0.22, 0.04) + 2.5 * gauss(t, 0.35, 0.07);
        for &(c, w) in &occipital {
            samples[c][start + k] += w * vep;
        }
    }
    if gain == 0.0 {
        return;
    }

    // jitter keeps trials from being carbon copies of each other
    let amp_jitter = rng.random_range(0.6..1.4);
    let phase = rng.random_range(0.0..2.0 * PI);
    match label {
        Label::Face => {
            let freq = rng.random_range(5.0..7.0);
            let latency = 0.17 + rng.random_range(-0.015..0.015);
            let theta_w = [(FZ, 0.4), (PZ, 0.7), (PO7, 1.0), (OZ, 0.7), (PO8, 1.0), (1, 0.3), (2, 0.4), (3, 0.3)];
            for k in 0..fs {
                let t = k as f64 / fs as f64;
                let n170 = -6.0 * gain * gauss(t, latency, 0.03);
                samples[PO7][start + k] += n170;
                samples[PO8][start + k] += n170;
                samples[OZ][start + k] += 0.5 * n170;
                let env = hann(t, 0.0, 0.8);
                let theta = 5.0 * gain * amp_jitter * env * (2.0 * PI * freq * t + phase).sin();
                for &(c, w) in &theta_w {
                    samples[c][start + k] += w * theta;
                }
            }
        }
        Label::Scene => {
            let freq = rng.random_range(9.0..11.0);
            let alpha_w = [(PO7, 1.0), (OZ, 1.0), (PO8, 1.0), (PZ, 0.5)];
            for k in 0..fs {
                let t = k as f64 / fs as f64;
                let env = hann(t, 0.1, 1.0);
                let alpha = 5.0 * gain * amp_jitter * env * (2.0 * PI * freq * t + phase).sin();
                for &(c, w) in &alpha_w {
                    samples[c][start + k] += w * alpha;
                }
            }
        }
    }
}

fn hann(t: f64, a: f64, b: f64) -> f64 {
    if t < a || t > b {
        0.0
    } else {
        let x = (t - a) / (b - a);
        0.5 - 0.5 * (2.0 * PI * x).cos()
    }
}
