use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use vigil_cli::{
    cmd_evaluate, cmd_features, cmd_pipeline, cmd_preprocess, cmd_synth, cmd_tune, ModelChoice, PipelineDirs, RunConfig,
};
use vigil_core::report::{format_accuracy, format_auc, RESULTS_FILE, TABLE_FILE};
use vigil_core::SnrPreset;

#[derive(Parser)]
#[command(name = "vigil", version, about = "Offline face/scene attention decoding from 8-channel EEG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Synth(Common),
    /// Filter, despike, smooth, baseline-correct and z-score a dataset.
    Preprocess(Common),
    /// Extract the 640-column feature matrix from a preprocessed dataset.
    Features(Common),
    /// Tune hyperparameters with TPE; resumes studies found in --out.
    Tune(Common),
    /// Cross-validate the tuned models and write the report.
    Evaluate(Common),
    /// Run every stage; without --data the dataset is synthesized.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Input directory of the stage (dataset or features).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory of the stage.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    /// Tuning budget per model.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Synthetic signal-to-noise preset: easy, hard or null.
    #[arg(long)]
    preset: Option<SnrPreset>,
    /// Study directory for `evaluate` (defaults to --data).
    #[arg(long)]
    study: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.data.is_some() {
            cfg.data.clone_from(&self.data);
        }
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
        cfg.model = self.model.unwrap_or(cfg.model);
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.preset = self.preset.unwrap_or(cfg.preset);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().with_context(|| format!("--{flag} is required"))
}

fn summarize(results: &vigil_core::report::Results, dir: &Path) {
    for m in &results.models {
        eprintln!(
            "{}: ACC {} AUC {} (best trial {} of {})",
            m.model,
            format_accuracy(m.evaluation.mean_accuracy),
            format_auc(m.evaluation.auc),
            m.tuning.best_trial,
            m.tuning.n_trials
        );
    }
    eprintln!("wrote {} and {}", dir.join(RESULTS_FILE).display(), dir.join(TABLE_FILE).display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let cfg = a.config()?;
            cmd_synth(&cfg, need(&cfg.out, "out")?)
        }
        Command::Preprocess(a) => {
            let cfg = a.config()?;
            cmd_preprocess(&cfg, need(&cfg.data, "data")?, need(&cfg.out, "out")?)
        }
        Command::Features(a) => {
            let cfg = a.config()?;
            cmd_features(&cfg, need(&cfg.data, "data")?, need(&cfg.out, "out")?)
        }
        Command::Tune(a) => {
            let cfg = a.config()?;
            for s in cmd_tune(&cfg, need(&cfg.data, "data")?, need(&cfg.out, "out")?)? {
                if let (Some(model), Some(best)) = (s.model, s.best()) {
                    eprintln!(
                        "{model}: best CV accuracy {:.3} at trial {} of {}",
                        best.value.unwrap_or(f64::NAN),
                        best.number,
                        s.trials.len()
                    );
                }
            }
            Ok(())
        }
        Command::Evaluate(a) => {
            let cfg = a.config()?;
            let data = need(&cfg.data, "data")?;
            let studies = a.study.as_deref().unwrap_or(data);
            let out = need(&cfg.out, "out")?;
            let results = cmd_evaluate(&cfg, data, studies, out)?;
            summarize(&results, out);
            Ok(())
        }
        Command::Pipeline(a) => {
            let cfg = a.config()?;
            let out = need(&cfg.out, "out")?;
            let results = cmd_pipeline(&cfg, cfg.data.as_deref(), out)?;
            summarize(&results, &PipelineDirs::under(out).report);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // one line: the context chain joined by ": ", stage name first
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
