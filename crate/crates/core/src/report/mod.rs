//! Run artifacts: `results.json`, a Markdown table in the layout of the
//! tuned-hyperparameter table, and SVG plots (ROC, class-average ERPs,
//! time-frequency maps).

mod svg;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ErpEpochs, TfClassMaps, ERP_SAMPLES};
use crate::ml::{EvalReport, ModelKind, ModelSpec, RocPoint};
use crate::model::{Label, SnrPreset};
use crate::tune::{Params, Study};

pub use svg::{diverging, escape, Svg};

pub const SCHEMA_VERSION: u32 = 1;
/// JSON Schema (draft 2020-12) every `results.json` satisfies.
pub const RESULTS_SCHEMA: &str = include_str!("results.schema.json");

pub const RESULTS_FILE: &str = "results.json";
pub const SCHEMA_FILE: &str = "results.schema.json";
pub const TABLE_FILE: &str = "table.md";
pub const ROC_FILE: &str = "roc.svg";
pub const ERP_FILE: &str = "erp.svg";
pub const TF_FILE: &str = "tf.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_trials: usize,
    pub n_features: usize,
    pub n_face: usize,
    pub n_scene: usize,
    pub snr_preset: Option<SnrPreset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSummary {
    pub n_trials: usize,
    pub n_complete: usize,
    pub best_trial: usize,
    /// Objective of the best trial, on the tuning folds.
    pub best_cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: ModelKind,
    pub params: Params,
    pub tuning: TuningSummary,
    /// Fold seed of the final evaluation; differs from the tuning folds.
    pub cv_seed: u64,
    pub evaluation: EvalReport,
}

impl ModelResult {
    pub fn new(study: &Study, evaluation: EvalReport, cv_seed: u64) -> Result<Self> {
        let best = study.best().ok_or_else(|| Error::Study("study has no completed trial".into()))?;
        Ok(ModelResult {
            model: evaluation.spec.kind(),
            params: best.params.clone(),
            tuning: TuningSummary {
                n_trials: study.trials.len(),
                n_complete: study.n_complete(),
                best_trial: best.number,
                best_cv_accuracy: best.value.unwrap_or(f64::NAN),
            },
            cv_seed,
            evaluation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub schema_version: u32,
    pub subject_id: String,
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub models: Vec<ModelResult>,
}

impl Results {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn model(&self, kind: ModelKind) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == kind)
    }
}

/// Hyperparameter value: three significant digits in `[1, 1000)`, otherwise
/// two-digit scientific notation (`894`, `4.58`, `1.1e-3`, `1.5e-2`).
pub fn format_param(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1.0..1000.0).contains(&a) {
        let decimals = (2 - a.log10().floor() as i32).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.1e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

pub fn format_accuracy(a: f64) -> String {
    format!("{:.0}%", a * 100.0)
}

pub fn format_auc(a: f64) -> String {
    format!("{a:.2}")
}

fn param_str(p: &Params, name: &str) -> String {
    match p.get(name) {
        Some(crate::tune::ParamValue::Float(x)) => format_param(*x),
        Some(crate::tune::ParamValue::Int(i)) => i.to_string(),
        Some(crate::tune::ParamValue::Choice(c)) => c.clone(),
        None => "-".into(),
    }
}

/// Rows of the per-subject table: RF block then SVM block.
pub fn table_rows(results: &Results) -> Vec<[String; 3]> {
    let mut rows = Vec::new();
    let mut block = |model: &str, entries: Vec<(&str, String)>| {
        for (i, (param, v)) in entries.into_iter().enumerate() {
            rows.push([if i == 0 { model.to_string() } else { String::new() }, param.to_string(), v]);
        }
    };
    for kind in [ModelKind::Rf, ModelKind::Svm] {
        let Some(m) = results.model(kind) else { continue };
        let p = &m.params;
        let perf = [("ACC", format_accuracy(m.evaluation.mean_accuracy)), ("AUC", format_auc(m.evaluation.auc))];
        let entries: Vec<(&str, String)> = match kind {
            ModelKind::Rf => [
                ("NS", param_str(p, "n_estimators")),
                ("MD", param_str(p, "max_depth")),
                ("MSS", param_str(p, "min_samples_split")),
                ("MSL", param_str(p, "min_samples_leaf")),
                ("MF", param_str(p, "max_features")),
                ("Crit.", param_str(p, "criterion")),
            ]
            .into_iter()
            .chain(perf)
            .collect(),
            ModelKind::Svm => {
                [("C", param_str(p, "C")), ("Γ", param_str(p, "gamma"))].into_iter().chain(perf).collect()
            }
        };
        block(if kind == ModelKind::Rf { "RF" } else { "SVM" }, entries);
    }
    rows
}

pub fn table_markdown(results: &Results) -> String {
    let mut s = String::new();
    s.push_str(&format!("| Model | Param. | {} |\n|---|---|---|\n", results.subject_id));
    for [m, p, v] in table_rows(results) {
        s.push_str(&format!("| {m} | {p} | {v} |\n"));
    }
    s.push_str(
        "\nNS: number of estimators, MD: max depth, MSS: min samples split, MSL: min samples leaf, \
         MF: max features. ACC and AUC from 5-fold cross-validation of the tuned model.\n",
    );
    s
}

const ROC_COLOURS: [&str; 2] = ["#d62728", "#1f77b4"];

/// ROC curves of every model over the chance diagonal.
pub fn roc_svg(curves: &[(String, &[RocPoint])]) -> String {
    let (x0, y0, side) = (60.0, 30.0, 320.0);
    let mut svg = Svg::new(x0 + side + 30.0, y0 + side + 50.0);
    svg.text(x0 + side / 2.0, 18.0, "middle", "ROC, face positive");
    svg.frame(x0, y0, side, side);
    svg.line(x0, y0 + side, x0 + side, y0, "#888888", r#" stroke-dasharray="4 4""#);
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        svg.text(x0 + v * side, y0 + side + 15.0, "middle", &format!("{v:.1}"));
        svg.text(x0 - 6.0, y0 + (1.0 - v) * side + 4.0, "end", &format!("{v:.1}"));
    }
    svg.text(x0 + side / 2.0, y0 + side + 35.0, "middle", "false positive rate");
    svg.text(14.0, y0 + side / 2.0, "middle", "TPR");
    for (i, (label, pts)) in curves.iter().enumerate() {
        let colour = ROC_COLOURS[i % ROC_COLOURS.len()];
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (x0 + p.fpr * side, y0 + (1.0 - p.tpr) * side)).collect();
        svg.polyline(&xy, colour, 2.0);
        let ly = y0 + side - 40.0 + 16.0 * i as f64;
        svg.line(x0 + side - 150.0, ly - 4.0, x0 + side - 130.0, ly - 4.0, colour, r#" stroke-width="2""#);
        svg.text(x0 + side - 125.0, ly, "start", label);
    }
    svg.finish()
}

fn panel_grid(n: usize) -> (usize, usize) {
    let cols = if n > 4 { 4 } else { n.max(1) };
    (cols, n.div_ceil(cols))
}

/// Class-average ERP per channel, face and scene overlaid.
pub fn erp_svg(erp: &ErpEpochs, channels: &[String]) -> String {
    let face = erp.class_average(Label::Face);
    let scene = erp.class_average(Label::Scene);
    let n = erp.n_channels;
    let (cols, rows) = panel_grid(n);
    let (pw, ph, pad) = (200.0, 130.0, 40.0);
    let mut svg = Svg::new(cols as f64 * (pw + pad) + pad, rows as f64 * (ph + pad) + pad + 20.0);
    svg.text(pad, 18.0, "start", "Class-average ERP, 1-4 Hz (red: face, blue: scene)");
    let m = face.iter().chain(&scene).flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    for c in 0..n {
        let (px, py) = (pad + (c % cols) as f64 * (pw + pad), pad + 10.0 + (c / cols) as f64 * (ph + pad));
        svg.frame(px, py, pw, ph);
        svg.line(px, py + ph / 2.0, px + pw, py + ph / 2.0, "#cccccc", "");
        svg.text(px + 4.0, py + 12.0, "start", channels.get(c).map_or("", String::as_str));
        svg.text(px, py + ph + 13.0, "start", "0 ms");
        svg.text(px + pw, py + ph + 13.0, "end", "1000 ms");
        for (wave, colour) in [(&face[c], ROC_COLOURS[0]), (&scene[c], ROC_COLOURS[1])] {
            let pts: Vec<(f64, f64)> = wave
                .iter()
                .enumerate()
                .map(|(i, v)| (px + pw * i as f64 / (ERP_SAMPLES - 1) as f64, py + ph / 2.0 - v / m * ph / 2.0))
                .collect();
            svg.polyline(&pts, colour, 1.5);
        }
    }
    svg.finish()
}

/// Class-average dB maps per channel: face column, scene column.
pub fn tf_svg(maps: &TfClassMaps) -> String {
    let (cw, ch, pad, label_w) = (8.0, 3.0, 24.0, 60.0);
    let nf = maps.freqs.len();
    let nb = maps.time_ms.len();
    let (pw, ph) = (nb as f64 * cw, nf as f64 * ch);
    let n = maps.channels.len();
    let m = maps.face.iter().chain(&maps.scene).flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut svg = Svg::new(label_w + 2.0 * (pw + pad) + pad, n as f64 * (ph + pad) + 2.0 * pad + 20.0);
    svg.text(pad, 18.0, "start", &format!("Time-frequency power, dB vs block baseline (colour range ±{m:.2} dB)"));
    for (col, (name, data)) in [("face", &maps.face), ("scene", &maps.scene)].into_iter().enumerate() {
        let px = label_w + col as f64 * (pw + pad);
        svg.text(px + pw / 2.0, pad + 16.0, "middle", name);
        for (c, grid) in data.iter().enumerate() {
            let py = 2.0 * pad + c as f64 * (ph + pad);
            for (fi, row) in grid.iter().enumerate() {
                // low frequencies at the bottom
                let y = py + (nf - 1 - fi) as f64 * ch;
                for (bi, v) in row.iter().enumerate() {
                    svg.rect(px + bi as f64 * cw, y, cw, ch, &diverging(*v, m));
                }
            }
            svg.frame(px, py, pw, ph);
            if col == 0 {
                svg.text(px - 6.0, py + ph / 2.0, "end", &maps.channels[c]);
                if let (Some(f0), Some(f1)) = (maps.freqs.first(), maps.freqs.last()) {
                    svg.text(px - 6.0, py + ph, "end", &format!("{f0:.0} Hz"));
                    svg.text(px - 6.0, py + 8.0, "end", &format!("{f1:.0} Hz"));
                }
            }
        }
    }
    svg.finish()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write `results.json`, its schema, `table.md`, `roc.svg` and, when the
/// inputs are given, `erp.svg` and `tf.svg` into `dir`.
pub fn render_report(
    results: &Results,
    erp: Option<(&ErpEpochs, &[String])>,
    tf: Option<&TfClassMaps>,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    if results.models.is_empty() {
        return Err(Error::Study("nothing to report: no model results".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(RESULTS_FILE), &results.to_json()?)?;
    write_file(&dir.join(SCHEMA_FILE), RESULTS_SCHEMA)?;
    write_file(&dir.join(TABLE_FILE), &table_markdown(results))?;
    let curves: Vec<(String, &[RocPoint])> = results
        .models
        .iter()
        .map(|m| {
            let name = match m.evaluation.spec {
                ModelSpec::Svm(_) => "SVM",
                ModelSpec::Rf(_) => "RF",
            };
            (format!("{name} (AUC {})", format_auc(m.evaluation.auc)), m.evaluation.roc.as_slice())
        })
        .collect();
    write_file(&dir.join(ROC_FILE), &roc_svg(&curves))?;
    if let Some((epochs, channels)) = erp {
        write_file(&dir.join(ERP_FILE), &erp_svg(epochs, channels))?;
    }
    if let Some(maps) = tf {
        write_file(&dir.join(TF_FILE), &tf_svg(maps))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_formatting() {
        assert_eq!(format_param(894.0), "894");
        assert_eq!(format_param(1.1e-3), "1.1e-3");
        assert_eq!(format_param(0.015), "1.5e-2");
        assert_eq!(format_param(93.0), "93");
        assert_eq!(format_param(4.5823), "4.58");
        assert_eq!(format_param(1000.0), "1e3");
        assert_eq!(format_param(1e-3), "1e-3");
    }

    #[test]
    fn performance_formatting() {
        assert_eq!(format_accuracy(0.85), "85%");
        assert_eq!(format_accuracy(0.8469), "85%");
        assert_eq!(format_auc(0.9), "0.90");
    }
}
