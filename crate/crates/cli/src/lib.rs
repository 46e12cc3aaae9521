//! Stage functions behind the `vigil` binary.
//!
//! Each stage reads the previous stage's artifact directory and writes its
//! own:
//!
//! ```text
//! synth       -> dataset dir        (meta.json, recording.csv)
//! preprocess  -> dataset dir        (preprocessed flag set in meta.json)
//! features    -> features dir       (features.csv, erp_epochs.csv, tf_maps.json, meta.json)
//! tune        -> study dir          (study_svm.jsonl, study_rf.jsonl)
//! evaluate    -> report dir         (results.json, table.md, *.svg, model_*.json)
//! ```
//!
//! Errors carry the stage name as their outermost context.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use vigil_core::dsp::{preprocess, PreprocessConfig};
use vigil_core::features::{extract, TfClassMaps, FEATURES_FILE, N_FEATURES, TF_MAPS_FILE};
use vigil_core::ml::cross_validate;
use vigil_core::model::{load_recording, synthesize, write_recording, Meta, DEFAULT_FS, META_FILE};
use vigil_core::report::{render_report, DatasetSummary, ModelResult, Results, SCHEMA_VERSION};
use vigil_core::tune::{load_trials, run_study, spec_from_params};
use vigil_core::{
    BandDefinition, FeatureMatrix, Label, ModelKind, SearchSpace, SnrPreset, Study, SynthConfig, TrainedModel,
};

pub const DEFAULT_TRIALS: usize = 50;
pub const MAX_TRIALS: usize = 10_000;
/// Final evaluation reuses the tuned parameters on folds drawn with
/// `seed + EVAL_SEED_OFFSET`, so the reported accuracy is not the maximum the
/// tuner selected on.
pub const EVAL_SEED_OFFSET: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Svm,
    Rf,
    Both,
}

impl ModelChoice {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Svm => vec![ModelKind::Svm],
            ModelChoice::Rf => vec![ModelKind::Rf],
            ModelChoice::Both => vec![ModelKind::Svm, ModelKind::Rf],
        }
    }
}

/// Everything a run depends on. Command-line flags override the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: ModelChoice,
    pub trials: usize,
    pub seed: u64,
    /// Signal-to-noise preset of the `synth` stage.
    pub preset: SnrPreset,
    pub bands: Vec<BandDefinition>,
    pub preprocess: PreprocessConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            out: None,
            model: ModelChoice::Both,
            trials: DEFAULT_TRIALS,
            seed: 1,
            preset: SnrPreset::Easy,
            bands: BandDefinition::standard(),
            preprocess: PreprocessConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&s).with_context(|| format!("config {}", path.display()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Ranges are checked against the nominal sampling rate; stages recheck
    /// against the recording's actual rate.
    pub fn validate(&self) -> Result<()> {
        ensure!((1..=MAX_TRIALS).contains(&self.trials), "trials must be in 1..={MAX_TRIALS}, got {}", self.trials);
        ensure!(self.bands.len() == 5, "expected 5 bands, got {}", self.bands.len());
        let fs = DEFAULT_FS as f64;
        for b in &self.bands {
            b.validate(fs)?;
        }
        self.preprocess.validate(fs)?;
        Ok(())
    }
}

pub fn study_file(kind: ModelKind) -> String {
    format!("study_{kind}.jsonl")
}

pub fn model_file(kind: ModelKind) -> String {
    format!("model_{kind}.json")
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().context(name)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn require(path: &Path, what: &str, producer: &str) -> Result<()> {
    if !path.exists() {
        bail!("missing {what} {}; run `vigil {producer}` first", path.display());
    }
    Ok(())
}

pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    stage("synth", || {
        let rec = synthesize(&SynthConfig { snr_preset: cfg.preset, seed: cfg.seed, ..Default::default() })?;
        write_recording(&rec, out)?;
        Ok(())
    })
}

pub fn cmd_preprocess(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    stage("preprocess", || {
        require(&data.join(META_FILE), "dataset", "synth")?;
        let rec = load_recording(data)?;
        ensure!(!rec.info().preprocessed, "dataset {} is already preprocessed", data.display());
        let pre = preprocess(&rec, &cfg.preprocess)?;
        write_recording(&pre.recording, out)?;
        Ok(())
    })
}

pub fn cmd_features(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    stage("features", || {
        require(&data.join(META_FILE), "dataset", "preprocess")?;
        let rec = load_recording(data)?;
        ensure!(
            rec.info().preprocessed,
            "dataset {} is not preprocessed; run `vigil preprocess` first",
            data.display()
        );
        for b in &cfg.bands {
            b.validate(rec.fs() as f64)?;
        }
        let ex = extract(&rec, &cfg.bands)?;
        ex.matrix.write(out)?;
        write(&out.join(TF_MAPS_FILE), &serde_json::to_string(&ex.tf_maps)?)?;
        write(&out.join(META_FILE), &serde_json::to_string_pretty(&Meta::of(&rec))?)?;
        Ok(())
    })
}

/// Feature matrix of a features directory, with the subject taken from its
/// `meta.json` when present.
pub fn load_features(dir: &Path) -> Result<(FeatureMatrix, Option<Meta>)> {
    require(&dir.join(FEATURES_FILE), "features", "features")?;
    let mut fm = FeatureMatrix::read(dir)?;
    let meta_path = dir.join(META_FILE);
    let meta = if meta_path.exists() {
        let s = fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
        let meta: Meta = serde_json::from_str(&s).with_context(|| format!("parsing {}", meta_path.display()))?;
        fm.subject_id = meta.subject_id.clone();
        Some(meta)
    } else {
        None
    };
    Ok((fm, meta))
}

/// Tune every selected model, resuming studies already on disk.
pub fn cmd_tune(cfg: &RunConfig, data: &Path, out: &Path) -> Result<Vec<Study>> {
    stage("tune", || {
        let (fm, _) = load_features(data)?;
        cfg.model
            .kinds()
            .into_iter()
            .map(|kind| {
                run_study(&fm, kind, cfg.trials, cfg.seed, Some(&out.join(study_file(kind))))
                    .with_context(|| format!("{kind} study"))
            })
            .collect()
    })
}

/// Re-evaluate each study's best parameters, fit a final model on all trials
/// and render the report.
pub fn cmd_evaluate(cfg: &RunConfig, data: &Path, studies: &Path, out: &Path) -> Result<Results> {
    stage("evaluate", || {
        let (fm, meta) = load_features(data)?;
        let all: Vec<usize> = (0..fm.n_rows()).collect();
        let cv_seed = cfg.seed.wrapping_add(EVAL_SEED_OFFSET);
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut models = Vec::new();
        for kind in cfg.model.kinds() {
            let path = studies.join(study_file(kind));
            require(&path, "study", "tune")?;
            let mut study = Study::new(fm.subject_id.clone(), Some(kind), SearchSpace::for_model(kind), cfg.seed);
            load_trials(&mut study, &path)?;
            let best = study.best().with_context(|| format!("study {} has no completed trial", path.display()))?;
            let spec = spec_from_params(kind, &best.params)?;
            let report = cross_validate(&fm, &spec, cv_seed).with_context(|| format!("{kind} evaluation"))?;
            let model = TrainedModel::fit(&fm, &all, &spec, cfg.seed).with_context(|| format!("{kind} final fit"))?;
            write(&out.join(model_file(kind)), &model.to_json()?)?;
            models.push(ModelResult::new(&study, report, cv_seed)?);
        }
        let n_face = fm.labels.iter().filter(|l| **l == Label::Face).count();
        let results = Results {
            schema_version: SCHEMA_VERSION,
            subject_id: fm.subject_id.clone(),
            seed: cfg.seed,
            dataset: DatasetSummary {
                n_trials: fm.n_rows(),
                n_features: N_FEATURES,
                n_face,
                n_scene: fm.n_rows() - n_face,
                snr_preset: meta.as_ref().and_then(|m| m.snr_preset),
            },
            models,
        };
        let tf_path = data.join(TF_MAPS_FILE);
        let tf: Option<TfClassMaps> = if tf_path.exists() {
            let s = fs::read_to_string(&tf_path).with_context(|| format!("reading {}", tf_path.display()))?;
            Some(serde_json::from_str(&s).with_context(|| format!("parsing {}", tf_path.display()))?)
        } else {
            None
        };
        let channels: Vec<String> = match &meta {
            Some(m) => m.channel_names.clone(),
            None => vigil_core::model::CHANNELS.iter().map(|c| c.to_string()).collect(),
        };
        render_report(&results, Some((&fm.erp, &channels)), tf.as_ref(), out)?;
        Ok(results)
    })
}

/// Directory layout of a full pipeline run under its output root.
#[derive(Debug, Clone)]
pub struct PipelineDirs {
    pub dataset: PathBuf,
    pub preprocessed: PathBuf,
    pub features: PathBuf,
    pub study: PathBuf,
    pub report: PathBuf,
}

impl PipelineDirs {
    pub fn under(root: &Path) -> Self {
        PipelineDirs {
            dataset: root.join("dataset"),
            preprocessed: root.join("preprocessed"),
            features: root.join("features"),
            study: root.join("study"),
            report: root.join("report"),
        }
    }
}

/// All stages in order. A given `data` directory replaces the synth stage.
pub fn cmd_pipeline(cfg: &RunConfig, data: Option<&Path>, out: &Path) -> Result<Results> {
    let dirs = PipelineDirs::under(out);
    let dataset = match data {
        Some(d) => d.to_path_buf(),
        None => {
            cmd_synth(cfg, &dirs.dataset)?;
            dirs.dataset.clone()
        }
    };
    cmd_preprocess(cfg, &dataset, &dirs.preprocessed)?;
    cmd_features(cfg, &dirs.preprocessed, &dirs.features)?;
    cmd_tune(cfg, &dirs.features, &dirs.study)?;
    cmd_evaluate(cfg, &dirs.features, &dirs.study, &dirs.report)
}
