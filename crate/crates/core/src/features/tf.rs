//! Morlet time-frequency features with decibel baseline normalization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Moments;
use crate::dsp::{cwt_power, WaveletBank};
use crate::error::Result;
use crate::model::{Label, Recording};

pub const TF_STATS: [&str; 7] = ["mean", "var", "peak_freq", "peak_mag", "skew", "energy", "kurtosis"];

/// Powers below this are clamped before taking the activity/baseline ratio.
pub const POWER_FLOOR: f64 = 1e-12;

/// Time bins per trial in the class-averaged maps kept for plotting.
pub const MAP_BINS: usize = 25;

/// `10 * log10(activity / baseline)` with both powers floored.
pub fn to_db(activity: f64, baseline: f64) -> f64 {
    10.0 * (activity.max(POWER_FLOOR) / baseline.max(POWER_FLOOR)).log10()
}

/// Mean power per frequency over `baseline`, dropping `trim` samples at each
/// edge when the window is long enough.
pub fn baseline_power(power: &[Vec<f64>], baseline: std::ops::Range<usize>, trim: usize) -> Vec<f64> {
    let r = if baseline.len() > 2 * trim { baseline.start + trim..baseline.end - trim } else { baseline };
    power.iter().map(|row| row[r.clone()].iter().sum::<f64>() / r.len() as f64).collect()
}

/// The seven statistics over a trial's dB map `[freq][time]`. Peak frequency
/// is the bank frequency whose temporal mean is largest (lowest wins ties).
pub fn tf_trial_stats(db: &[Vec<f64>], freqs: &[f64]) -> [f64; 7] {
    let cells: Vec<f64> = db.iter().flatten().copied().collect();
    let m = Moments::of(&cells);
    let mut peak = (0usize, f64::NEG_INFINITY);
    for (i, row) in db.iter().enumerate() {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        if mean > peak.1 {
            peak = (i, mean);
        }
    }
    [m.mean, m.var, freqs[peak.0], peak.1, m.skew, m.energy, m.kurt]
}

/// Class-averaged dB maps for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfClassMaps {
    pub freqs: Vec<f64>,
    /// Bin centres in milliseconds after stimulus onset.
    pub time_ms: Vec<f64>,
    pub channels: Vec<String>,
    /// `[channel][freq][bin]`
    pub face: Vec<Vec<Vec<f64>>>,
    pub scene: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct TfFeatures {
    /// `[n_trials][n_channels * 7]`, channel-major.
    pub rows: Vec<Vec<f64>>,
    pub maps: TfClassMaps,
}

/// Per channel and block: CWT power over baseline + activity, baseline power
/// from the baseline minus 0.5 s at each edge, dB per activity cell, then the
/// seven statistics per trial.
pub fn tf_features(rec: &Recording, bank: &WaveletBank) -> Result<TfFeatures> {
    let fs = rec.fs() as usize;
    let n_ch = rec.n_channels();
    let nf = bank.len();
    let blocks = rec.blocks();
    let trim = fs / 2;

    // (channel, block) -> per-trial stats and per-trial binned dB maps
    type Cell = (Vec<[f64; 7]>, Vec<Vec<Vec<f64>>>);
    let jobs: Vec<(usize, usize)> = (0..n_ch).flat_map(|c| (0..blocks.len()).map(move |b| (c, b))).collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(c, bi)| {
            let b = &blocks[bi];
            let seg = b.baseline.start..b.activity.end;
            let power = cwt_power(&rec.channel(c)[seg.clone()], bank)?;
            let base_rel = 0..b.baseline.len();
            let base = baseline_power(&power, base_rel, trim);
            let act0 = b.activity.start - seg.start;
            let mut stats = Vec::with_capacity(b.n_trials);
            let mut binned = Vec::with_capacity(b.n_trials);
            for t in 0..b.n_trials {
                let r = act0 + t * fs..act0 + (t + 1) * fs;
                let db: Vec<Vec<f64>> =
                    (0..nf).map(|f| power[f][r.clone()].iter().map(|&p| to_db(p, base[f])).collect()).collect();
                stats.push(tf_trial_stats(&db, bank.freqs()));
                binned.push(bin_map(&db, MAP_BINS));
            }
            Ok((stats, binned))
        })
        .collect::<Result<_>>()?;

    let mut rows = vec![Vec::with_capacity(n_ch * 7); rec.n_trials()];
    let mut face = vec![vec![vec![0.0; MAP_BINS]; nf]; n_ch];
    let mut scene = face.clone();
    let labels = rec.trial_labels();
    let n_face = labels.iter().filter(|l| **l == Label::Face).count().max(1) as f64;
    let n_scene = (labels.len() as f64 - n_face).max(1.0);
    for (j, &(c, bi)) in jobs.iter().enumerate() {
        let first_trial: usize = blocks[..bi].iter().map(|b| b.n_trials).sum();
        let (stats, binned) = &cells[j];
        let (acc, n) = if blocks[bi].label == Label::Face { (&mut face, n_face) } else { (&mut scene, n_scene) };
        for (t, s) in stats.iter().enumerate() {
            // jobs are channel-major, so rows fill in channel order
            rows[first_trial + t].extend_from_slice(s);
            for (f, row) in binned[t].iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    acc[c][f][k] += v / n;
                }
            }
        }
    }

    let bin_ms = 1000.0 / MAP_BINS as f64;
    let maps = TfClassMaps {
        freqs: bank.freqs().to_vec(),
        time_ms: (0..MAP_BINS).map(|k| (k as f64 + 0.5) * bin_ms).collect(),
        channels: rec.channel_names().to_vec(),
        face,
        scene,
    };
    Ok(TfFeatures { rows, maps })
}

fn bin_map(db: &[Vec<f64>], bins: usize) -> Vec<Vec<f64>> {
    db.iter()
        .map(|row| {
            let n = row.len();
            (0..bins)
                .map(|k| {
                    let (a, b) = (k * n / bins, ((k + 1) * n / bins).max(k * n / bins + 1));
                    row[a..b].iter().sum::<f64>() / (b - a) as f64
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_identities() {
        assert_eq!(to_db(3.7, 3.7), 0.0);
        assert!((to_db(10.0 * 0.25, 0.25) - 10.0).abs() < 1e-9);
        assert!(to_db(0.0, 1.0).is_finite());
        assert_eq!(to_db(0.0, 0.0), 0.0);
    }

    #[test]
    fn flat_map_stats() {
        let freqs: Vec<f64> = (1..=4).map(f64::from).collect();
        let zero = vec![vec![0.0; 10]; 4];
        let s = tf_trial_stats(&zero, &freqs);
        assert_eq!((s[0], s[1], s[5]), (0.0, 0.0, 0.0));
        assert_eq!(s[2], 1.0); // tie -> lowest frequency
        let ten = vec![vec![10.0; 10]; 4];
        let s = tf_trial_stats(&ten, &freqs);
        assert_eq!((s[0], s[3], s[5]), (10.0, 10.0, 4000.0));
    }

    #[test]
    fn baseline_trim() {
        let p = vec![vec![100.0, 1.0, 1.0, 1.0, 100.0]];
        assert_eq!(baseline_power(&p, 0..5, 1), vec![1.0]);
        assert_eq!(baseline_power(&p, 0..2, 1), vec![50.5]);
    }
}
