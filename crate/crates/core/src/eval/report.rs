//! Accuracy and confusion reporting.

use serde::Serialize;

use super::EvalError;
use crate::classify::LabelVocab;

/// K x K confusion counts; rows are true labels, columns predicted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(vocab: &LabelVocab) -> Self {
        let k = vocab.len();
        Self { labels: vocab.names().to_vec(), counts: vec![vec![0; k]; k] }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.labels.len()).map(|r| self.row_sum(r)).sum()
    }

    /// Row-normalized percentages; rows with no samples stay at zero.
    pub fn row_percent(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let sum: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if sum == 0 { 0.0 } else { 100.0 * c as f64 / sum as f64 })
                    .collect()
            })
            .collect()
    }

    /// Aligned text table in the usual confusion-matrix layout: true labels
    /// on rows, predicted on columns, row-normalized percentages.
    pub fn render(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(|l| l.len())
            .max()
            .unwrap_or(4)
            .max(7);
        let mut out = String::new();
        out.push_str(&format!("{:>width$}", "tr \\ pr", width = width));
        for l in &self.labels {
            out.push_str(&format!("  {l:>width$}", width = width));
        }
        out.push('\n');
        for (r, row) in self.row_percent().iter().enumerate() {
            out.push_str(&format!("{:>width$}", self.labels[r], width = width));
            for v in row {
                out.push_str(&format!("  {v:>width$.2}", width = width));
            }
            out.push('\n');
        }
        out
    }
}

/// Accumulates a confusion matrix from aligned (truth, prediction) label
/// pairs. Labels outside the vocabulary are an error.
pub fn confusion(
    truths: &[String],
    predictions: &[String],
    vocab: &LabelVocab,
) -> Result<ConfusionMatrix, EvalError> {
    if truths.len() != predictions.len() {
        return Err(EvalError::Protocol(format!(
            "{} truths but {} predictions",
            truths.len(),
            predictions.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(vocab);
    for (t, p) in truths.iter().zip(predictions) {
        let ti = vocab.id(t)?;
        let pi = vocab.id(p)?;
        cm.record(ti.0, pi.0);
    }
    Ok(cm)
}

/// Per-class accuracy for one label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub label: String,
    pub test_count: u64,
    pub accuracy_pct: f64,
}

/// Outcome of one fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldSummary {
    pub subject: String,
    pub test_count: usize,
    pub correct: usize,
}

/// Per-class accuracies (row-normalized diagonal of the confusion matrix,
/// in percent), their unweighted mean, and per-fold detail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub per_class: Vec<ClassAccuracy>,
    pub average_pct: f64,
    pub folds: Vec<FoldSummary>,
}

impl AccuracyReport {
    /// Classes with no test samples are excluded rather than reported as
    /// zero; the average is the unweighted mean over the included classes.
    pub fn from_confusion(cm: &ConfusionMatrix, folds: Vec<FoldSummary>) -> Self {
        let mut per_class = Vec::new();
        for (r, label) in cm.labels.iter().enumerate() {
            let total = cm.row_sum(r);
            if total == 0 {
                continue;
            }
            per_class.push(ClassAccuracy {
                label: label.clone(),
                test_count: total,
                accuracy_pct: 100.0 * cm.counts[r][r] as f64 / total as f64,
            });
        }
        let average_pct = if per_class.is_empty() {
            0.0
        } else {
            per_class.iter().map(|c| c.accuracy_pct).sum::<f64>() / per_class.len() as f64
        };
        Self { per_class, average_pct, folds }
    }

    /// One aligned table row per report, with per-class columns and the
    /// average in the last column.
    pub fn render_table(rows: &[(&str, &AccuracyReport)]) -> String {
        let Some((_, first)) = rows.first() else {
            return String::new();
        };
        let name_width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        out.push_str(&format!("{:<name_width$}", "method", name_width = name_width));
        for c in &first.per_class {
            out.push_str(&format!("  {:>9}", truncate(&c.label, 9)));
        }
        out.push_str(&format!("  {:>9}", "avg"));
        out.push('\n');
        for (name, report) in rows {
            out.push_str(&format!("{name:<name_width$}", name_width = name_width));
            for c in &report.per_class {
                out.push_str(&format!("  {:>9.1}", c.accuracy_pct));
            }
            out.push_str(&format!("  {:>9.1}", report.average_pct));
            out.push('\n');
        }
        out
    }
}

fn truncate(s: &str, n: usize) -> &str {
    if s.len() <= n {
        s
    } else {
        &s[..n]
    }
}
