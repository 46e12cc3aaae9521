//! Domain types: recordings with block/trial annotations, epoch sets, bands.

mod io;
mod synth;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_recording, write_recording, Meta, META_FILE, RECORDING_FILE};
pub use synth::{synthesize, synthesize_with_truth, SynthTruth};

/// Electrode montage of the headset, in storage order.
pub const CHANNELS: [&str; 8] = ["Fz", "C3", "Cz", "C4", "Pz", "PO7", "Oz", "PO8"];

pub const DEFAULT_FS: u32 = 250;
pub const DEFAULT_TRIALS_PER_BLOCK: usize = 40;

/// Index of a channel name in [`CHANNELS`].
pub fn channel_index(name: &str) -> Option<usize> {
    CHANNELS.iter().position(|c| *c == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Face,
    Scene,
}

impl Label {
    /// Classifier encoding: face = +1, scene = -1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Face => 1.0,
            Label::Scene => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Face => "face",
            Label::Scene => "scene",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "face" => Ok(Label::Face),
            "scene" => Ok(Label::Scene),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cue,
    Baseline,
    Activity,
    Rest,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Cue => "cue",
            Phase::Baseline => "baseline",
            Phase::Activity => "activity",
            Phase::Rest => "rest",
        }
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cue" => Ok(Phase::Cue),
            "baseline" => Ok(Phase::Baseline),
            "activity" => Ok(Phase::Activity),
            "rest" => Ok(Phase::Rest),
            other => Err(format!("unknown phase {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrPreset {
    Easy,
    Hard,
    Null,
}

impl FromStr for SnrPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "easy" => Ok(SnrPreset::Easy),
            "hard" => Ok(SnrPreset::Hard),
            "null" => Ok(SnrPreset::Null),
            other => Err(format!("unknown snr preset {other:?}")),
        }
    }
}

/// Per-sample annotation columns, all of recording length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Annotations {
    pub block: Vec<u8>,
    pub phase: Vec<Phase>,
    pub trial: Vec<Option<u16>>,
    pub label: Vec<Option<Label>>,
}

impl Annotations {
    pub fn len(&self) -> usize {
        self.block.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block.is_empty()
    }

    pub fn push(&mut self, block: u8, phase: Phase, trial: Option<u16>, label: Option<Label>) {
        self.block.push(block);
        self.phase.push(phase);
        self.trial.push(trial);
        self.label.push(label);
    }
}

/// Sample ranges of one block, derived from the annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub id: usize,
    pub label: Label,
    pub span: Range<usize>,
    pub baseline: Range<usize>,
    pub activity: Range<usize>,
    pub n_trials: usize,
}

impl BlockLayout {
    /// Sample range of trial `k` within the block (absolute indices).
    pub fn trial(&self, k: usize, fs: usize) -> Range<usize> {
        let start = self.activity.start + k * fs;
        start..start + fs
    }
}

/// Recording-level metadata that is carried through the pipeline but does
/// not affect the signal invariants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordingInfo {
    pub snr_preset: Option<SnrPreset>,
    pub seed: Option<u64>,
    /// Fraction of task-relevant composite images (SART manipulation).
    pub relevant_fraction: Option<f64>,
    pub preprocessed: bool,
}

/// One subject's multi-channel EEG, in microvolts, with block/phase/trial
/// annotations. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    subject_id: String,
    fs: u32,
    channel_names: Vec<String>,
    samples: Vec<Vec<f64>>,
    annotations: Annotations,
    trials_per_block: usize,
    info: RecordingInfo,
    blocks: Vec<BlockLayout>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        fs: u32,
        channel_names: Vec<String>,
        samples: Vec<Vec<f64>>,
        annotations: Annotations,
        trials_per_block: usize,
        info: RecordingInfo,
    ) -> Result<Self> {
        let blocks = validate(fs, &channel_names, &samples, &annotations, trials_per_block)?;
        Ok(Self {
            subject_id: subject_id.into(),
            fs,
            channel_names,
            samples,
            annotations,
            trials_per_block,
            info,
            blocks,
        })
    }

    /// Same layout, new sample values (used by processing stages).
    pub fn with_samples(&self, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.len() != self.samples.len() || samples.iter().any(|c| c.len() != self.len()) {
            return Err(Error::InvalidRecording("replacement samples change the shape".into()));
        }
        Ok(Self { samples, ..self.clone() })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.samples[idx]
    }

    pub fn annotations(&self) -> &Annotations {
        &self.annotations
    }

    pub fn blocks(&self) -> &[BlockLayout] {
        &self.blocks
    }

    pub fn trials_per_block(&self) -> usize {
        self.trials_per_block
    }

    pub fn info(&self) -> &RecordingInfo {
        &self.info
    }

    pub fn set_info(&mut self, info: RecordingInfo) {
        self.info = info;
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn n_trials(&self) -> usize {
        self.blocks.len() * self.trials_per_block
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn block_labels(&self) -> Vec<Label> {
        self.blocks.iter().map(|b| b.label).collect()
    }

    /// Trial labels in block-major order.
    pub fn trial_labels(&self) -> Vec<Label> {
        self.blocks.iter().flat_map(|b| std::iter::repeat_n(b.label, b.n_trials)).collect()
    }

    pub fn trial_blocks(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| std::iter::repeat_n(b.id, b.n_trials)).collect()
    }

    /// Cut the activity phase into per-trial epochs.
    pub fn epochs(&self) -> EpochSet {
        let fs = self.fs as usize;
        let n_ch = self.n_channels();
        let mut data = Vec::with_capacity(self.n_trials() * n_ch * fs);
        for block in &self.blocks {
            for k in 0..block.n_trials {
                let r = block.trial(k, fs);
                for ch in &self.samples {
                    data.extend_from_slice(&ch[r.clone()]);
                }
            }
        }
        EpochSet {
            data,
            n_trials: self.n_trials(),
            n_channels: n_ch,
            n_samples: fs,
            fs: self.fs,
            labels: self.trial_labels(),
            block_of: self.trial_blocks(),
        }
    }
}

fn validate(
    fs: u32,
    channel_names: &[String],
    samples: &[Vec<f64>],
    ann: &Annotations,
    trials_per_block: usize,
) -> Result<Vec<BlockLayout>> {
    let bad = |msg: String| Err(Error::InvalidRecording(msg));
    if fs == 0 {
        return bad("fs must be positive".into());
    }
    if channel_names.len() != CHANNELS.len() || channel_names.iter().zip(CHANNELS).any(|(a, b)| a != b) {
        return bad(format!("expected channels {CHANNELS:?}, got {channel_names:?}"));
    }
    if samples.len() != channel_names.len() {
        return bad(format!("{} channel names but {} sample columns", channel_names.len(), samples.len()));
    }
    let n = ann.block.len();
    if n == 0 {
        return bad("recording has no samples".into());
    }
    if ann.phase.len() != n || ann.trial.len() != n || ann.label.len() != n {
        return bad("annotation columns differ in length".into());
    }
    for (name, ch) in channel_names.iter().zip(samples) {
        if ch.len() != n {
            return bad(format!("channel {name} has {} samples, expected {n}", ch.len()));
        }
    }
    if trials_per_block == 0 {
        return bad("trials_per_block must be positive".into());
    }

    let fs = fs as usize;
    let mut blocks: Vec<BlockLayout> = Vec::new();
    let mut start = 0;
    while start < n {
        let id = ann.block[start];
        let mut end = start;
        while end < n && ann.block[end] == id {
            end += 1;
        }
        if id as usize != blocks.len() {
            return bad(format!("block {id} at sample {start} is out of order (expected block {})", blocks.len()));
        }
        blocks.push(block_layout(id as usize, start..end, ann, fs, trials_per_block)?);
        start = end;
    }
    Ok(blocks)
}

fn block_layout(
    id: usize,
    span: Range<usize>,
    ann: &Annotations,
    fs: usize,
    trials_per_block: usize,
) -> Result<BlockLayout> {
    let err = |msg: String| Error::InvalidRecording(format!("block {id}: {msg}"));
    let contiguous = |phase: Phase| -> Result<Range<usize>> {
        let idx: Vec<usize> = span.clone().filter(|&i| ann.phase[i] == phase).collect();
        match (idx.first(), idx.last()) {
            (Some(&a), Some(&b)) if b - a + 1 == idx.len() => Ok(a..b + 1),
            (Some(_), Some(_)) => Err(err(format!("{} phase is not contiguous", phase.as_str()))),
            _ => Err(err(format!("missing {} phase", phase.as_str()))),
        }
    };
    let baseline = contiguous(Phase::Baseline)?;
    let activity = contiguous(Phase::Activity)?;
    if baseline.end > activity.start {
        return Err(err("baseline must precede activity".into()));
    }

    let label = ann.label[activity.start].ok_or_else(|| err("activity sample without label".into()))?;
    for i in span.clone() {
        let in_act = activity.contains(&i);
        match (in_act, ann.trial[i], ann.label[i]) {
            (true, Some(_), Some(l)) if l == label => {}
            (true, _, Some(l)) if l != label => {
                return Err(err(format!("mixed labels ({label} and {l}) within block")));
            }
            (true, _, _) => return Err(err(format!("activity sample {i} lacks trial or label"))),
            (false, None, None) => {}
            (false, _, _) => return Err(err(format!("sample {i} outside activity carries trial/label"))),
        }
    }

    // trials: contiguous runs of exactly fs samples numbered 0..T-1
    let mut n_trials = 0;
    let mut i = activity.start;
    while i < activity.end {
        let t = ann.trial[i].unwrap_or(u16::MAX) as usize;
        let mut j = i;
        while j < activity.end && ann.trial[j] == ann.trial[i] {
            j += 1;
        }
        if t != n_trials {
            return Err(err(format!("trial {t} found where trial {n_trials} expected")));
        }
        if j - i != fs {
            return Err(err(format!("trial {t} has {} samples, expected {fs}", j - i)));
        }
        n_trials += 1;
        i = j;
    }
    if n_trials != trials_per_block {
        return Err(err(format!("expected {trials_per_block} trials, found {n_trials}")));
    }
    Ok(BlockLayout { id, label, span, baseline, activity, n_trials })
}

/// Trial-major epoch tensor `[n_trials x n_channels x n_samples]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub data: Vec<f64>,
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: u32,
    pub labels: Vec<Label>,
    pub block_of: Vec<usize>,
}

impl EpochSet {
    pub fn epoch(&self, trial: usize, channel: usize) -> &[f64] {
        let off = (trial * self.n_channels + channel) * self.n_samples;
        &self.data[off..off + self.n_samples]
    }
}

/// A named frequency band `[lo, hi]` in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl BandDefinition {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), lo, hi }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi <= fs / 2.0) {
            return Err(Error::arg(format!("band {} [{}, {}] Hz invalid for fs {fs} Hz", self.name, self.lo, self.hi)));
        }
        Ok(())
    }

    /// Delta, theta, alpha, beta, gamma.
    pub fn standard() -> Vec<BandDefinition> {
        vec![
            BandDefinition::new("delta", 1.0, 4.0),
            BandDefinition::new("theta", 4.0, 8.0),
            BandDefinition::new("alpha", 8.0, 14.0),
            BandDefinition::new("beta", 14.0, 30.0),
            BandDefinition::new("gamma", 30.0, 40.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_blocks: usize,
    pub trials_per_block: usize,
    pub fs: u32,
    pub snr_preset: SnrPreset,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_blocks: 8,
            trials_per_block: DEFAULT_TRIALS_PER_BLOCK,
            fs: DEFAULT_FS,
            snr_preset: SnrPreset::Easy,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_blocks < 2 || self.n_blocks % 2 != 0 {
            return Err(Error::InvalidConfig(format!("n_blocks must be even and >= 2, got {}", self.n_blocks)));
        }
        if self.trials_per_block < 5 {
            return Err(Error::InvalidConfig(format!("trials_per_block must be >= 5, got {}", self.trials_per_block)));
        }
        if self.fs < 100 || self.fs % 50 != 0 {
            return Err(Error::InvalidConfig(format!("fs must be a multiple of 50 and >= 100, got {}", self.fs)));
        }
        if self.n_blocks > u8::MAX as usize {
            return Err(Error::InvalidConfig("too many blocks".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_parts(trials: usize) -> (Vec<String>, Vec<Vec<f64>>, Annotations) {
        let fs = 10;
        let mut ann = Annotations::default();
        for b in 0..2u8 {
            let label = if b == 0 { Label::Face } else { Label::Scene };
            for _ in 0..5 {
                ann.push(b, Phase::Baseline, None, None);
            }
            for t in 0..trials {
                for _ in 0..fs {
                    ann.push(b, Phase::Activity, Some(t as u16), Some(label));
                }
            }
            ann.push(b, Phase::Rest, None, None);
        }
        let names = CHANNELS.iter().map(|s| s.to_string()).collect();
        let samples = vec![vec![0.0; ann.len()]; 8];
        (names, samples, ann)
    }

    #[test]
    fn layout_is_derived_from_annotations() {
        let (names, samples, ann) = tiny_parts(3);
        let rec = Recording::new("s", 10, names, samples, ann, 3, RecordingInfo::default()).unwrap();
        assert_eq!(rec.blocks().len(), 2);
        assert_eq!(rec.blocks()[1].label, Label::Scene);
        assert_eq!(rec.blocks()[0].activity, 5..35);
        assert_eq!(rec.n_trials(), 6);
        let ep = rec.epochs();
        assert_eq!(ep.data.len(), 6 * 8 * 10);
        assert_eq!(ep.labels.iter().filter(|l| **l == Label::Face).count(), 3);
    }

    #[test]
    fn mixed_labels_rejected() {
        let (names, samples, mut ann) = tiny_parts(3);
        ann.label[7] = Some(Label::Scene);
        let err = Recording::new("s", 10, names, samples, ann, 3, RecordingInfo::default()).unwrap_err();
        assert!(err.to_string().contains("block 0"), "{err}");
        assert!(err.to_string().contains("mixed labels"), "{err}");
    }

    #[test]
    fn wrong_trial_count_names_block() {
        let (names, samples, ann) = tiny_parts(3);
        let err = Recording::new("s", 10, names, samples, ann, 4, RecordingInfo::default()).unwrap_err();
        assert!(err.to_string().contains("block 0: expected 4 trials, found 3"), "{err}");
    }

    #[test]
    fn channel_order_enforced() {
        let (mut names, samples, ann) = tiny_parts(3);
        names.swap(0, 1);
        assert!(Recording::new("s", 10, names, samples, ann, 3, RecordingInfo::default()).is_err());
    }

    #[test]
    fn band_validation() {
        assert!(BandDefinition::new("x", 8.0, 14.0).validate(250.0).is_ok());
        assert!(BandDefinition::new("x", 0.0, 14.0).validate(250.0).is_err());
        assert!(BandDefinition::new("x", 14.0, 8.0).validate(250.0).is_err());
        assert!(BandDefinition::new("x", 100.0, 130.0).validate(250.0).is_err());
    }

    #[test]
    fn synth_config_rules() {
        assert!(SynthConfig::default().validate().is_ok());
        assert!(SynthConfig { n_blocks: 3, ..Default::default() }.validate().is_err());
        assert!(SynthConfig { trials_per_block: 4, ..Default::default() }.validate().is_err());
    }
}
