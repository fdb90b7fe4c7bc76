//! Machine-readable experiment reports and their text renderings.
//!
//! Each cross-validation run writes one JSON results file (stable field
//! order, reproducible byte-for-byte under equal seeds) and a plain-text
//! table view. `render_*` functions print every number with fixed
//! 4-decimal formatting so textual diffs stay stable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use myox_core::eval::{AggregateReport, Confusion, FoldReport};
use myox_core::roi::SeverityLabel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("results file not found: {0}")]
    Missing(PathBuf),
    #[error("cannot parse results file at byte offset {offset} (line {line}, column {column}): {detail}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Reproducibility block: everything needed to re-run the experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportConfig {
    pub manifest: String,
    pub features: Option<String>,
    pub seed: u64,
    pub epochs: u32,
    pub batch_size: usize,
    pub base_lr: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every_epochs: u32,
    pub l2_alpha: f64,
    pub c1x1: usize,
    pub n_levels: usize,
    pub augment: bool,
    pub jobs: usize,
    pub registry_version: String,
    pub code_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassRow {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MuscleRow {
    pub muscle: String,
    pub accuracy: f64,
    pub macro_f_score: f64,
    pub confusion: [[u64; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictionRow {
    pub subject_id: String,
    pub slice_index: u32,
    pub muscle: String,
    pub side: String,
    pub label: u8,
    pub predicted: u8,
    pub probabilities: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FoldRow {
    pub fold_index: usize,
    pub held_out_subject: String,
    pub confusion: [[u64; 3]; 3],
    pub accuracy: f64,
    pub predictions: Vec<PredictionRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: ReportConfig,
    pub pooled_confusion: [[u64; 3]; 3],
    pub accuracy: f64,
    pub per_class: Vec<ClassRow>,
    pub per_muscle: Vec<MuscleRow>,
    pub adjacent_errors_only: bool,
    pub folds: Vec<FoldRow>,
}

fn confusion_array(c: &Confusion) -> [[u64; 3]; 3] {
    c.counts
}

/// Assemble the serializable report from the pooled aggregation and the
/// per-fold outputs.
pub fn build_report(
    experiment: &str,
    config: ReportConfig,
    aggregate: &AggregateReport,
    folds: &[FoldReport],
) -> ExperimentReport {
    let per_class = SeverityLabel::ALL
        .iter()
        .map(|&label| ClassRow {
            label: label.name().to_string(),
            precision: aggregate.overall.precision[label.index()],
            recall: aggregate.overall.recall[label.index()],
            f_score: aggregate.overall.f_score[label.index()],
        })
        .collect();
    let per_muscle = aggregate
        .per_muscle
        .iter()
        .map(|(muscle, confusion, table)| MuscleRow {
            muscle: muscle.code().to_string(),
            accuracy: table.accuracy,
            macro_f_score: table.macro_f(),
            confusion: confusion_array(confusion),
        })
        .collect();
    let folds = folds
        .iter()
        .map(|f| FoldRow {
            fold_index: f.fold_index,
            held_out_subject: f.held_out_subject.clone(),
            confusion: confusion_array(&f.confusion),
            accuracy: if f.confusion.total() > 0 {
                f.confusion.trace() as f64 / f.confusion.total() as f64
            } else {
                0.0
            },
            predictions: f
                .predictions
                .iter()
                .map(|p| PredictionRow {
                    subject_id: p.record.subject_id.clone(),
                    slice_index: p.record.slice_index,
                    muscle: p.record.muscle.muscle.code().to_string(),
                    side: p.record.muscle.side.code().to_string(),
                    label: p.truth.index() as u8,
                    predicted: p.predicted.index() as u8,
                    probabilities: p.probabilities,
                })
                .collect(),
        })
        .collect();
    ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.to_string(),
        config,
        pooled_confusion: confusion_array(&aggregate.pooled_confusion),
        accuracy: aggregate.overall.accuracy,
        per_class,
        per_muscle,
        adjacent_errors_only: aggregate.pooled_confusion.adjacent_errors_only(),
        folds,
    }
}

pub fn write_report(path: &Path, report: &ExperimentReport) -> Result<(), ReportError> {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ExperimentReport, ReportError> {
    if !path.is_file() {
        return Err(ReportError::Missing(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        // serde_json reports line/column; translate to a byte offset.
        let offset = text
            .lines()
            .take(line.saturating_sub(1))
            .map(|l| l.len() + 1)
            .sum::<usize>()
            + column.saturating_sub(1);
        ReportError::Parse {
            offset,
            line,
            column,
            detail: e.to_string(),
        }
    })
}

const CLASS_HEADINGS: [&str; 3] = ["healthy", "mild", "mod_severe"];

/// Human-readable tables: per-class metrics, overall accuracy, the pooled
/// confusion matrix, and the per-muscle breakdown.
pub fn render_text(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "experiment: {}", report.experiment);
    let _ = writeln!(
        out,
        "seed: {}  epochs: {}  batch_size: {}  l2_alpha: {:.4}  augment: {}",
        report.config.seed,
        report.config.epochs,
        report.config.batch_size,
        report.config.l2_alpha,
        report.config.augment
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10}",
        "class", "precision", "recall", "f-score"
    );
    for row in &report.per_class {
        let _ = writeln!(
            out,
            "{:<12} {:>10.4} {:>10.4} {:>10.4}",
            row.label, row.precision, row.recall, row.f_score
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "overall accuracy: {:.4}", report.accuracy);
    let _ = writeln!(out);
    let _ = writeln!(out, "pooled confusion matrix (rows = true, cols = predicted)");
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10}",
        "", CLASS_HEADINGS[0], CLASS_HEADINGS[1], CLASS_HEADINGS[2]
    );
    for (i, heading) in CLASS_HEADINGS.iter().enumerate() {
        let r = report.pooled_confusion[i];
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10}",
            heading, r[0], r[1], r[2]
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10}",
        "muscle", "accuracy", "macro-F"
    );
    for row in &report.per_muscle {
        let _ = writeln!(
            out,
            "{:<12} {:>10.4} {:>10.4}",
            row.muscle, row.accuracy, row.macro_f_score
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "misclassifications only between adjacent grades: {}",
        if report.adjacent_errors_only { "yes" } else { "no" }
    );
    out
}

/// The same numbers as comma-separated lines, for scripting.
pub fn render_delimited(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "section,key,value1,value2,value3");
    for row in &report.per_class {
        let _ = writeln!(
            out,
            "per_class,{},{:.4},{:.4},{:.4}",
            row.label, row.precision, row.recall, row.f_score
        );
    }
    let _ = writeln!(out, "overall,accuracy,{:.4},,", report.accuracy);
    for (i, heading) in CLASS_HEADINGS.iter().enumerate() {
        let r = report.pooled_confusion[i];
        let _ = writeln!(out, "confusion,{heading},{},{},{}", r[0], r[1], r[2]);
    }
    for row in &report.per_muscle {
        let _ = writeln!(
            out,
            "per_muscle,{},{:.4},{:.4},",
            row.muscle, row.accuracy, row.macro_f_score
        );
    }
    let _ = writeln!(
        out,
        "overall,adjacent_errors_only,{},,",
        report.adjacent_errors_only
    );
    out
}
