use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::space::{spec_from_params, Params, SearchSpace};
use super::tpe::{sample_prior, tpe_suggest, trial_rng, TpeConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ml::{cross_validate, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub number: usize,
    pub params: Params,
    pub value: Option<f64>,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    Tpe,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    pub space: SearchSpace,
    pub seed: u64,
    pub trials: Vec<Trial>,
}

impl Study {
    pub fn new(subject_id: impl Into<String>, model: Option<ModelKind>, space: SearchSpace, seed: u64) -> Self {
        Study { subject_id: subject_id.into(), model, space, seed, trials: Vec::new() }
    }

    /// Completed trial with the largest objective; the earliest wins ties.
    pub fn best(&self) -> Option<&Trial> {
        self.trials.iter().filter(|t| t.status == TrialStatus::Complete).fold(
            None,
            |best: Option<&Trial>, t| match best {
                Some(b) if b.value >= t.value => Some(b),
                _ => Some(t),
            },
        )
    }

    pub fn n_complete(&self) -> usize {
        self.trials.iter().filter(|t| t.status == TrialStatus::Complete).count()
    }

    /// Parameters for the next trial.
    pub fn ask(&self, sampler: Sampler, cfg: &TpeConfig) -> Result<Params> {
        let mut rng = trial_rng(self.seed, self.trials.len());
        match sampler {
            Sampler::Tpe => tpe_suggest(&self.space, &self.trials, cfg, &mut rng),
            Sampler::Random => {
                self.space.validate()?;
                Ok(sample_prior(&self.space, &mut rng))
            }
        }
    }

    /// Record the outcome of evaluating `params`.
    pub fn tell(&mut self, params: Params, outcome: Result<f64>) -> &Trial {
        let number = self.trials.len();
        let trial = match outcome {
            Ok(v) if v.is_finite() => {
                Trial { number, params, value: Some(v), status: TrialStatus::Complete, error: None }
            }
            Ok(v) => Trial {
                number,
                params,
                value: None,
                status: TrialStatus::Failed,
                error: Some(format!("non-finite objective {v}")),
            },
            Err(e) => Trial { number, params, value: None, status: TrialStatus::Failed, error: Some(e.to_string()) },
        };
        self.trials.push(trial);
        self.trials.last().expect("just pushed")
    }
}

/// Run `objective` until the study holds `budget` trials. Fails only when
/// every trial failed.
pub fn optimize<F>(study: &mut Study, budget: usize, sampler: Sampler, mut objective: F) -> Result<()>
where
    F: FnMut(&Params) -> Result<f64>,
{
    optimize_with(study, budget, sampler, &TpeConfig::default(), |p| objective(p), |_| Ok(()))
}

fn optimize_with<F, S>(
    study: &mut Study,
    budget: usize,
    sampler: Sampler,
    cfg: &TpeConfig,
    mut objective: F,
    mut on_trial: S,
) -> Result<()>
where
    F: FnMut(&Params) -> Result<f64>,
    S: FnMut(&Study) -> Result<()>,
{
    if budget == 0 {
        return Err(Error::arg("trial budget must be at least 1"));
    }
    while study.trials.len() < budget {
        let params = study.ask(sampler, cfg)?;
        let outcome = objective(&params);
        study.tell(params, outcome);
        on_trial(study)?;
    }
    if study.n_complete() == 0 {
        let last = study.trials.last().and_then(|t| t.error.clone()).unwrap_or_default();
        return Err(Error::Study(format!("all {} trials failed; last error: {last}", study.trials.len())));
    }
    Ok(())
}

/// One JSON-lines record: the study identity plus one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrialRecord {
    subject_id: String,
    model: Option<ModelKind>,
    seed: u64,
    #[serde(flatten)]
    trial: Trial,
}

/// Load the trials persisted at `path` into `study`, checking that they were
/// produced by the same subject, model and seed.
pub fn load_trials(study: &mut Study, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: k as u64 + 1,
            msg: e.to_string(),
        })?;
        if rec.subject_id != study.subject_id || rec.model != study.model || rec.seed != study.seed {
            return Err(Error::Study(format!(
                "{} belongs to subject {} / model {:?} / seed {}, not {} / {:?} / {}",
                path.display(),
                rec.subject_id,
                rec.model,
                rec.seed,
                study.subject_id,
                study.model,
                study.seed
            )));
        }
        if rec.trial.number != study.trials.len() {
            return Err(Error::Study(format!("{}: trial {} out of sequence", path.display(), rec.trial.number)));
        }
        if !study.space.contains(&rec.trial.params) {
            return Err(Error::Study(format!(
                "{}: trial {} outside the search space",
                path.display(),
                rec.trial.number
            )));
        }
        study.trials.push(rec.trial);
    }
    Ok(())
}

fn append_trial(study: &Study, path: &Path) -> Result<()> {
    let trial = study.trials.last().expect("called after a trial").clone();
    let rec = TrialRecord { subject_id: study.subject_id.clone(), model: study.model, seed: study.seed, trial };
    let mut line = serde_json::to_string(&rec)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    f.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))
}

/// TPE over the model's search space with mean 5-fold CV accuracy as the
/// objective. With `store`, trials already in the file are resumed and new
/// ones appended as they finish.
pub fn run_study(fm: &FeatureMatrix, kind: ModelKind, budget: usize, seed: u64, store: Option<&Path>) -> Result<Study> {
    let mut study = Study::new(fm.subject_id.clone(), Some(kind), SearchSpace::for_model(kind), seed);
    if let Some(path) = store {
        if path.exists() {
            load_trials(&mut study, path)?;
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let objective = |p: &Params| -> Result<f64> {
        let spec = spec_from_params(kind, p)?;
        Ok(cross_validate(fm, &spec, seed)?.mean_accuracy)
    };
    optimize_with(&mut study, budget, Sampler::Tpe, &TpeConfig::default(), objective, |s| match store {
        Some(path) => append_trial(s, path),
        None => Ok(()),
    })?;
    Ok(study)
}

pub const MIN_COMPARE_BUDGET: usize = 20;

/// Fraction of seeds `0..n_seeds` on which TPE's best value is at least
/// random search's best, both with `budget` trials.
pub fn compare_random<F>(space: &SearchSpace, objective: F, budget: usize, n_seeds: usize) -> Result<f64>
where
    F: Fn(&Params) -> f64,
{
    if budget < MIN_COMPARE_BUDGET {
        return Err(Error::arg(format!("comparison budget {budget} below minimum {MIN_COMPARE_BUDGET}")));
    }
    if n_seeds == 0 {
        return Err(Error::arg("need at least one seed"));
    }
    space.validate()?;
    let mut wins = 0;
    for seed in 0..n_seeds as u64 {
        let best = |sampler| -> Result<f64> {
            let mut s = Study::new("compare", None, space.clone(), seed);
            optimize(&mut s, budget, sampler, |p| Ok(objective(p)))?;
            Ok(s.best().and_then(|t| t.value).unwrap_or(f64::NEG_INFINITY))
        };
        if best(Sampler::Tpe)? >= best(Sampler::Random)? {
            wins += 1;
        }
    }
    Ok(wins as f64 / n_seeds as f64)
}
