use rayon::prelude::*;

use super::stats::{median, Moments};
use crate::dsp::analytic_envelope;
use crate::error::Result;
use crate::model::{BandDefinition, Recording};

pub const HILBERT_STATS: [&str; 6] = ["mean", "median", "std", "skew", "energy", "kurtosis"];

/// mean, median, std, skewness, energy, excess kurtosis of one envelope slice.
pub fn envelope_stats(env: &[f64]) -> [f64; 6] {
    let m = Moments::of(env);
    [m.mean, median(env), m.std, m.skew, m.energy, m.kurt]
}

/// Band envelopes over each block's whole activity phase, sliced per trial.
/// Rows are `[n_trials][n_channels * n_bands * 6]`, channel then band major.
pub fn hilbert_features(rec: &Recording, bands: &[BandDefinition]) -> Result<Vec<Vec<f64>>> {
    let fs = rec.fs() as usize;
    for b in bands {
        b.validate(fs as f64)?;
    }
    let blocks = rec.blocks();
    let per_channel: Vec<Vec<Vec<[f64; 6]>>> = (0..rec.n_channels())
        .into_par_iter()
        .map(|c| {
            // [band][trial] -> stats
            bands
                .iter()
                .map(|band| {
                    let mut out = Vec::with_capacity(rec.n_trials());
                    for b in blocks {
                        let env = analytic_envelope(&rec.channel(c)[b.activity.clone()], band, fs as f64)?;
                        for t in 0..b.n_trials {
                            out.push(envelope_stats(&env[t * fs..(t + 1) * fs]));
                        }
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    Ok((0..rec.n_trials())
        .map(|t| per_channel.iter().flat_map(|bands| bands.iter().flat_map(move |trials| trials[t])).collect())
        .collect())
}
