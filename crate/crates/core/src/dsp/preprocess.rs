use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{baseline_correct, design_butterworth_bandpass, despike_mad, filtfilt, knn_smooth, ZScore};
use crate::error::{Error, Result};
use crate::model::{Recording, RecordingInfo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub filter_order: usize,
    pub filter_lo: f64,
    pub filter_hi: f64,
    pub mad_k: f64,
    pub knn_k: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { filter_order: 5, filter_lo: 0.4, filter_hi: 40.0, mad_k: 5.0, knn_k: 7 }
    }
}

impl PreprocessConfig {
    pub fn validate(&self, fs: f64) -> Result<()> {
        design_butterworth_bandpass(self.filter_order, self.filter_lo, self.filter_hi, fs)?;
        if !(self.mad_k > 0.0 && self.mad_k.is_finite()) {
            return Err(Error::InvalidConfig(format!("mad_k must be positive, got {}", self.mad_k)));
        }
        if self.knn_k == 0 || self.knn_k % 2 == 0 {
            return Err(Error::InvalidConfig(format!("knn_k must be odd and positive, got {}", self.knn_k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub recording: Recording,
    /// Despiked sample indices per channel.
    pub spikes: Vec<Vec<usize>>,
}

/// Band-pass, despike, smooth, baseline-correct per block and z-score per
/// channel, in that order.
///
/// Baseline correction subtracts each block's baseline mean from every sample
/// of that block, and the z-score statistics come from the concatenated
/// activity samples but are applied to the whole channel, so all phases stay
/// on a common scale.
pub fn preprocess(rec: &Recording, cfg: &PreprocessConfig) -> Result<PreprocessOutput> {
    let fs = rec.fs() as f64;
    cfg.validate(fs)?;
    let filt = design_butterworth_bandpass(cfg.filter_order, cfg.filter_lo, cfg.filter_hi, fs)?;
    let blocks = rec.blocks();

    let staged: Vec<(Vec<f64>, Vec<usize>)> = rec
        .samples()
        .par_iter()
        .zip(rec.channel_names().par_iter())
        .map(|(x, name)| {
            let wrap = |stage: &'static str, block: Option<usize>| {
                move |e: Error| Error::Stage { stage, channel: name.clone(), block, source: Box::new(e) }
            };
            let y = filtfilt(&filt, x).map_err(wrap("bandpass", None))?;
            let (y, spikes) = despike_mad(&y, cfg.mad_k).map_err(wrap("despike", None))?;
            let mut y = knn_smooth(&y, cfg.knn_k).map_err(wrap("smooth", None))?;
            for b in blocks {
                let span = b.span.clone();
                let corrected =
                    baseline_correct(&y[span.clone()], &y[b.baseline.clone()]).map_err(wrap("baseline", Some(b.id)))?;
                y[span].copy_from_slice(&corrected);
            }
            let activity: Vec<f64> = blocks.iter().flat_map(|b| y[b.activity.clone()].iter().copied()).collect();
            let z = ZScore::fit(&activity).map_err(wrap("zscore", None))?;
            y.iter_mut().for_each(|v| *v = z.apply(*v));
            Ok((y, spikes))
        })
        .collect::<Result<_>>()?;

    let (samples, spikes): (Vec<_>, Vec<_>) = staged.into_iter().unzip();
    let mut out = rec.with_samples(samples)?;
    out.set_info(RecordingInfo { preprocessed: true, ..rec.info().clone() });
    Ok(PreprocessOutput { recording: out, spikes })
}
