//! Dataset directory format: `meta.json` + `recording.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Annotations, Label, Phase, Recording, RecordingInfo, SnrPreset, CHANNELS, DEFAULT_TRIALS_PER_BLOCK};
use crate::error::{Error, Result};

pub const META_FILE: &str = "meta.json";
pub const RECORDING_FILE: &str = "recording.csv";

fn default_trials() -> usize {
    DEFAULT_TRIALS_PER_BLOCK
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub subject_id: String,
    pub fs: u32,
    pub channel_names: Vec<String>,
    pub n_blocks: usize,
    pub block_labels: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_preset: Option<SnrPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials_per_block: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_fraction: Option<f64>,
    #[serde(default)]
    pub preprocessed: bool,
}

impl Meta {
    pub fn of(rec: &Recording) -> Self {
        let info = rec.info();
        Meta {
            subject_id: rec.subject_id().to_string(),
            fs: rec.fs(),
            channel_names: rec.channel_names().to_vec(),
            n_blocks: rec.blocks().len(),
            block_labels: rec.block_labels(),
            snr_preset: info.snr_preset,
            seed: info.seed,
            trials_per_block: rec.trials_per_block(),
            relevant_fraction: info.relevant_fraction,
            preprocessed: info.preprocessed,
        }
    }
}

fn expected_header() -> Vec<String> {
    let mut h = vec!["t_s".to_string()];
    h.extend(CHANNELS.iter().map(|c| c.to_string()));
    h.extend(["block", "phase", "trial", "label"].map(String::from));
    h
}

/// Load a dataset directory and validate every recording invariant.
pub fn load_recording(dir: impl AsRef<Path>) -> Result<Recording> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        path: meta_path.clone(),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let schema = |msg: String| Error::Schema { path: meta_path.clone(), msg };
    if meta.channel_names.len() != CHANNELS.len() {
        return Err(schema(format!(
            "channel-count mismatch: expected {} channels, found {}",
            CHANNELS.len(),
            meta.channel_names.len()
        )));
    }
    if meta.block_labels.len() != meta.n_blocks {
        return Err(schema(format!("n_blocks = {} but {} block labels", meta.n_blocks, meta.block_labels.len())));
    }

    let csv_path = dir.join(RECORDING_FILE);
    let file = File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let parse_err = |line: u64, msg: String| Error::Parse { path: csv_path.clone(), line, msg };

    let header: Vec<String> =
        reader.headers().map_err(|e| parse_err(1, e.to_string()))?.iter().map(str::to_string).collect();
    let n_channel_cols = header.len().saturating_sub(5);
    if header.len() < 5 || n_channel_cols != CHANNELS.len() {
        return Err(parse_err(
            1,
            format!("channel-count mismatch: expected {} channel columns, found {n_channel_cols}", CHANNELS.len()),
        ));
    }
    if header != expected_header() {
        return Err(parse_err(1, format!("unexpected header {:?}", header.join(","))));
    }

    let n_ch = CHANNELS.len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n_ch];
    let mut ann = Annotations::default();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(parse_err(line, e.to_string()));
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        for (c, col) in samples.iter_mut().enumerate() {
            let v: f64 = record[c + 1]
                .parse()
                .map_err(|_| parse_err(line, format!("bad value {:?} in column {}", &record[c + 1], CHANNELS[c])))?;
            col.push(v);
        }
        let block: u8 =
            record[n_ch + 1].parse().map_err(|_| parse_err(line, format!("bad block {:?}", &record[n_ch + 1])))?;
        let phase: Phase = record[n_ch + 2].parse().map_err(|e| parse_err(line, e))?;
        let trial = match &record[n_ch + 3] {
            "" => None,
            s => Some(s.parse::<u16>().map_err(|_| parse_err(line, format!("bad trial {s:?}")))?),
        };
        let label = match &record[n_ch + 4] {
            "" => None,
            s => Some(s.parse::<Label>().map_err(|e| parse_err(line, e))?),
        };
        ann.push(block, phase, trial, label);
    }

    let info = RecordingInfo {
        snr_preset: meta.snr_preset,
        seed: meta.seed,
        relevant_fraction: meta.relevant_fraction,
        preprocessed: meta.preprocessed,
    };
    let rec = Recording::new(
        meta.subject_id.clone(),
        meta.fs,
        meta.channel_names.clone(),
        samples,
        ann,
        meta.trials_per_block,
        info,
    )
    .map_err(|e| Error::Schema { path: csv_path.clone(), msg: e.to_string() })?;

    if rec.block_labels() != meta.block_labels {
        return Err(schema("block_labels disagree with recording.csv annotations".into()));
    }
    Ok(rec)
}

/// Write `rec` as a dataset directory. Output is byte-stable for equal input.
pub fn write_recording(rec: &Recording, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if rec.is_empty() || rec.samples().iter().any(|c| c.is_empty()) {
        return Err(Error::InvalidRecording("refusing to write an empty recording".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let meta_path = dir.join(META_FILE);
    let mut meta_json = serde_json::to_string_pretty(&Meta::of(rec))?;
    meta_json.push('\n');
    fs::write(&meta_path, meta_json).map_err(|e| Error::io(&meta_path, e))?;

    let csv_path = dir.join(RECORDING_FILE);
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    let io_err = |e| Error::io(&csv_path, e);
    writeln!(w, "{}", expected_header().join(",")).map_err(io_err)?;

    let ann = rec.annotations();
    let fs = rec.fs() as f64;
    let mut line = String::with_capacity(256);
    for i in 0..rec.len() {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{}", i as f64 / fs);
        for ch in rec.samples() {
            let _ = write!(line, ",{}", ch[i]);
        }
        let _ = write!(line, ",{},{},", ann.block[i], ann.phase[i].as_str());
        if let Some(t) = ann.trial[i] {
            let _ = write!(line, "{t}");
        }
        line.push(',');
        if let Some(l) = ann.label[i] {
            line.push_str(l.as_str());
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
