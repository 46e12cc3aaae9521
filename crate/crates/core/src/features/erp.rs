use rayon::prelude::*;

use crate::dsp::{design_butterworth_bandpass, filtfilt};
use crate::error::{Error, Result};
use crate::model::{Label, Recording};

pub const ERP_FS: u32 = 50;
pub const ERP_SAMPLES: usize = 50;
pub const ERP_BAND: (f64, f64) = (1.0, 4.0);
pub const ERP_FILTER_ORDER: usize = 4;

/// Per-trial, per-channel 1-4 Hz epochs decimated to 50 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpEpochs {
    /// `[n_trials][n_channels][ERP_SAMPLES]`, flattened.
    pub data: Vec<f64>,
    pub n_trials: usize,
    pub n_channels: usize,
    pub labels: Vec<Label>,
    pub block_of: Vec<usize>,
}

impl ErpEpochs {
    pub fn epoch(&self, trial: usize, channel: usize) -> &[f64] {
        let off = (trial * self.n_channels + channel) * ERP_SAMPLES;
        &self.data[off..off + ERP_SAMPLES]
    }

    /// Subset of trials, in the given order.
    pub fn select(&self, rows: &[usize]) -> ErpEpochs {
        let stride = self.n_channels * ERP_SAMPLES;
        let mut data = Vec::with_capacity(rows.len() * stride);
        for &r in rows {
            data.extend_from_slice(&self.data[r * stride..(r + 1) * stride]);
        }
        ErpEpochs {
            data,
            n_trials: rows.len(),
            n_channels: self.n_channels,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            block_of: rows.iter().map(|&r| self.block_of[r]).collect(),
        }
    }

    /// Class-average waveform per channel: `[channel][sample]`.
    pub fn class_average(&self, label: Label) -> Vec<Vec<f64>> {
        let rows: Vec<usize> = (0..self.n_trials).filter(|&t| self.labels[t] == label).collect();
        (0..self.n_channels)
            .map(|c| {
                let mut acc = vec![0.0; ERP_SAMPLES];
                for &t in &rows {
                    acc.iter_mut().zip(self.epoch(t, c)).for_each(|(a, v)| *a += v);
                }
                let n = rows.len().max(1) as f64;
                acc.iter().map(|a| a / n).collect()
            })
            .collect()
    }
}

/// Filter each block's activity at 1-4 Hz (zero phase), cut it into trials
/// and keep every `fs / 50`-th sample.
pub fn erp_epochs(rec: &Recording) -> Result<ErpEpochs> {
    let fs = rec.fs();
    if fs % ERP_FS != 0 {
        return Err(Error::arg(format!("fs {fs} Hz is not divisible by {ERP_FS}")));
    }
    let step = (fs / ERP_FS) as usize;
    let fs_n = fs as usize;
    let filt = design_butterworth_bandpass(ERP_FILTER_ORDER, ERP_BAND.0, ERP_BAND.1, fs as f64)?;
    let n_ch = rec.n_channels();

    // per (channel, block): filtered activity segment
    let filtered: Vec<Vec<Vec<f64>>> = (0..n_ch)
        .into_par_iter()
        .map(|c| {
            rec.blocks()
                .iter()
                .map(|b| filtfilt(&filt, &rec.channel(c)[b.activity.clone()]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut data = Vec::with_capacity(rec.n_trials() * n_ch * ERP_SAMPLES);
    for (bi, b) in rec.blocks().iter().enumerate() {
        for t in 0..b.n_trials {
            for ch in &filtered {
                let seg = &ch[bi][t * fs_n..(t + 1) * fs_n];
                data.extend(seg.iter().step_by(step).take(ERP_SAMPLES));
            }
        }
    }
    Ok(ErpEpochs {
        data,
        n_trials: rec.n_trials(),
        n_channels: n_ch,
        labels: rec.trial_labels(),
        block_of: rec.trial_blocks(),
    })
}
