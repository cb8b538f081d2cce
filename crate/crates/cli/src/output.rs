//! Output-directory layout for evaluation and benchmark runs.
//!
//! Every run directory contains `config.json` with the exact resolved
//! configuration and input hashes; re-running from that config reproduces
//! the other files byte for byte. No timestamps, no absolute-path
//! dependence in report content.

use std::fs;
use std::path::{Path, PathBuf};

use facedyn_core::eval::bench::BenchOutcome;
use facedyn_core::eval::{AccuracyReport, Evaluation};
use serde::Serialize;

use crate::CliError;

#[derive(Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub method: Option<String>,
    pub kinds: Vec<String>,
    pub scales: Vec<f64>,
    pub step_frac: f64,
    pub order: usize,
    pub manifest: Option<String>,
    pub manifest_hash: Option<String>,
    pub extraction_config_hash: Option<String>,
    pub cache_dir: Option<String>,
    pub labels: Vec<String>,
    pub jobs: Option<usize>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Serialized accuracy file: the report plus run metadata.
#[derive(Serialize)]
struct AccuracyFile<'a> {
    method: &'a str,
    order: usize,
    degenerate_windows: u64,
    #[serde(flatten)]
    report: &'a AccuracyReport,
}

pub fn write_evaluation(dir: &Path, evaluation: &Evaluation) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let accuracy_path = dir.join("accuracy.json");
    write_json(
        &accuracy_path,
        &AccuracyFile {
            method: evaluation.method.name(),
            order: evaluation.order,
            degenerate_windows: evaluation.degenerate_windows,
            report: &evaluation.accuracy,
        },
    )?;
    let confusion_path = dir.join("confusion.json");
    write_json(&confusion_path, &evaluation.confusion)?;

    let predictions_path = dir.join("predictions.jsonl");
    let mut lines = String::new();
    for p in &evaluation.predictions {
        lines.push_str(&serde_json::to_string(p).map_err(|e| {
            CliError::Internal(format!("cannot serialize prediction `{}`: {e}", p.id))
        })?);
        lines.push('\n');
    }
    write_text(&predictions_path, &lines)?;

    let report_path = dir.join("report.txt");
    write_text(&report_path, &render_report(evaluation))?;
    Ok(vec![accuracy_path, confusion_path, predictions_path, report_path])
}

pub fn render_report(evaluation: &Evaluation) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "method: {}    order: {}    sequences: {}\n\n",
        evaluation.method.name(),
        evaluation.order,
        evaluation.predictions.len()
    ));
    out.push_str("per-class accuracy (%)\n");
    out.push_str(&AccuracyReport::render_table(&[(
        evaluation.method.name(),
        &evaluation.accuracy,
    )]));
    out.push_str("\nconfusion matrix (row-normalized %)\n");
    out.push_str(&evaluation.confusion.render());
    out
}

pub fn write_bench(dir: &Path, outcome: &BenchOutcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let json_path = dir.join("bench.json");
    write_json(&json_path, outcome)?;

    let mut text = String::new();
    text.push_str(&format!(
        "synthetic benchmark: {} classes x {} sequences, {} channels, seed {}\n",
        outcome.spec.classes,
        outcome.spec.sequences_per_class,
        outcome.spec.channels,
        outcome.spec.seed
    ));
    for level in &outcome.levels {
        text.push_str(&format!("\nnoise std {}\n", level.noise_std));
        text.push_str(&AccuracyReport::render_table(&[
            ("hankel", &level.hankel.accuracy),
            ("dtw", &level.dtw.accuracy),
        ]));
    }
    let mut confusion = String::new();
    if let Some(last) = outcome.levels.last() {
        confusion.push_str(&format!(
            "\nhankel confusion at noise std {} (row-normalized %)\n",
            last.noise_std
        ));
        confusion.push_str(&last.hankel.confusion.render());
    }
    text.push_str(&confusion);
    let text_path = dir.join("bench.txt");
    write_text(&text_path, &text)?;
    Ok(vec![json_path, text_path])
}
