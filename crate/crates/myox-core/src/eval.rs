//! Subject-level fold construction, class weighting, and classification
//! metrics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::roi::{RoiRecord, SeverityLabel, TargetMuscle};

pub const N_CLASSES: usize = SeverityLabel::COUNT;

/// Row order of per-muscle breakdown tables.
pub const MUSCLE_REPORT_ORDER: [TargetMuscle; 4] = [
    TargetMuscle::VastusLateralis,
    TargetMuscle::VastusIntermedius,
    TargetMuscle::VastusMedialis,
    TargetMuscle::RectusFemoris,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    TooFewSubjects(usize),
    EmptyConfusion,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TooFewSubjects(n) => {
                write!(f, "leave-one-out needs at least 2 subjects, found {n}")
            }
            EvalError::EmptyConfusion => write!(f, "confusion matrix has no observations"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// One leave-one-subject-out fold.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub fold_index: usize,
    pub held_out_subject: String,
    pub train_records: Vec<RoiRecord>,
    pub test_records: Vec<RoiRecord>,
}

/// One fold per distinct subject, ordered by subject id; each fold tests
/// all of that subject's patches and trains on everyone else's.
pub fn make_folds(records: &[RoiRecord]) -> Result<Vec<FoldPlan>, EvalError> {
    let mut by_subject: BTreeMap<&str, ()> = BTreeMap::new();
    for r in records {
        by_subject.insert(&r.subject_id, ());
    }
    if by_subject.len() < 2 {
        return Err(EvalError::TooFewSubjects(by_subject.len()));
    }
    let folds = by_subject
        .keys()
        .enumerate()
        .map(|(fold_index, &subject)| {
            let (test, train): (Vec<_>, Vec<_>) = records
                .iter()
                .cloned()
                .partition(|r| r.subject_id == subject);
            FoldPlan {
                fold_index,
                held_out_subject: subject.into(),
                train_records: train,
                test_records: test,
            }
        })
        .collect();
    Ok(folds)
}

/// Per-label loss weights `w_l = N / (L * n_l)` with `L = 3`. Labels absent
/// from the training fold get weight 0; the caller is told through
/// `missing` so it can surface a warning.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub weights: [f64; N_CLASSES],
    pub missing: Vec<SeverityLabel>,
}

pub fn class_weights(labels: &[SeverityLabel]) -> ClassWeights {
    let mut counts = [0usize; N_CLASSES];
    for l in labels {
        counts[l.index()] += 1;
    }
    let n = labels.len() as f64;
    let mut weights = [0.0; N_CLASSES];
    let mut missing = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            missing.push(SeverityLabel::from_index(i).unwrap());
        } else {
            weights[i] = n / (N_CLASSES as f64 * c as f64);
        }
    }
    ClassWeights { weights, missing }
}

/// Row = true label, column = predicted label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl Confusion {
    pub fn record(&mut self, truth: SeverityLabel, predicted: SeverityLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &Confusion) {
        for i in 0..N_CLASSES {
            for j in 0..N_CLASSES {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }

    pub fn col_sum(&self, col: usize) -> u64 {
        (0..N_CLASSES).map(|i| self.counts[i][col]).sum()
    }

    /// True when every off-diagonal count sits next to the diagonal, i.e.
    /// confusions happen only between ordinally adjacent grades.
    pub fn adjacent_errors_only(&self) -> bool {
        for i in 0..N_CLASSES {
            for j in 0..N_CLASSES {
                if i.abs_diff(j) > 1 && self.counts[i][j] > 0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Per-class precision/recall/F-score plus overall accuracy. Degenerate
/// ratios (0/0) are reported as 0 and flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub precision: [f64; N_CLASSES],
    pub recall: [f64; N_CLASSES],
    pub f_score: [f64; N_CLASSES],
    pub accuracy: f64,
    /// Classes never seen and never predicted in this table.
    pub degenerate: Vec<SeverityLabel>,
}

impl MetricsTable {
    pub fn macro_f(&self) -> f64 {
        self.f_score.iter().sum::<f64>() / N_CLASSES as f64
    }
}

pub fn metrics(confusion: &Confusion) -> Result<MetricsTable, EvalError> {
    if confusion.total() == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let mut precision = [0.0; N_CLASSES];
    let mut recall = [0.0; N_CLASSES];
    let mut f_score = [0.0; N_CLASSES];
    let mut degenerate = Vec::new();
    for c in 0..N_CLASSES {
        let tp = confusion.counts[c][c] as f64;
        let pred = confusion.col_sum(c) as f64;
        let truth = confusion.row_sum(c) as f64;
        if pred == 0.0 && truth == 0.0 {
            degenerate.push(SeverityLabel::from_index(c).unwrap());
        }
        precision[c] = if pred > 0.0 { tp / pred } else { 0.0 };
        recall[c] = if truth > 0.0 { tp / truth } else { 0.0 };
        let denom = precision[c] + recall[c];
        f_score[c] = if denom > 0.0 {
            2.0 * precision[c] * recall[c] / denom
        } else {
            0.0
        };
    }
    Ok(MetricsTable {
        precision,
        recall,
        f_score,
        accuracy: confusion.trace() as f64 / confusion.total() as f64,
        degenerate,
    })
}

/// One held-out prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub record: RoiRecord,
    pub truth: SeverityLabel,
    pub predicted: SeverityLabel,
    pub probabilities: [f64; N_CLASSES],
}

/// Argmax with the lowest class index winning ties.
pub fn argmax_label(probabilities: &[f64; N_CLASSES]) -> SeverityLabel {
    let mut best = 0;
    for i in 1..N_CLASSES {
        if probabilities[i] > probabilities[best] {
            best = i;
        }
    }
    SeverityLabel::from_index(best).unwrap()
}

/// Per-fold outcome: ordered held-out predictions plus the fold confusion.
#[derive(Debug, Clone)]
pub struct FoldReport {
    pub fold_index: usize,
    pub held_out_subject: String,
    pub predictions: Vec<Prediction>,
    pub confusion: Confusion,
}

impl FoldReport {
    pub fn from_predictions(
        fold_index: usize,
        held_out_subject: String,
        predictions: Vec<Prediction>,
    ) -> Self {
        let mut confusion = Confusion::default();
        for p in &predictions {
            confusion.record(p.truth, p.predicted);
        }
        FoldReport {
            fold_index,
            held_out_subject,
            predictions,
            confusion,
        }
    }
}

/// Pooled cross-validation summary: confusions summed over folds, metrics
/// computed on the pooled matrix, and a per-muscle breakdown (both sides
/// pooled) of the pooled predictions.
#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub pooled_confusion: Confusion,
    pub overall: MetricsTable,
    pub per_muscle: Vec<(TargetMuscle, Confusion, MetricsTable)>,
}

pub fn aggregate(reports: &[FoldReport]) -> Result<AggregateReport, EvalError> {
    let mut pooled = Confusion::default();
    for r in reports {
        pooled.add(&r.confusion);
    }
    let overall = metrics(&pooled)?;
    let mut per_muscle = Vec::new();
    for muscle in MUSCLE_REPORT_ORDER {
        let mut confusion = Confusion::default();
        for report in reports {
            for p in &report.predictions {
                if p.record.muscle.muscle == muscle {
                    confusion.record(p.truth, p.predicted);
                }
            }
        }
        if confusion.total() > 0 {
            let table = metrics(&confusion)?;
            per_muscle.push((muscle, confusion, table));
        }
    }
    Ok(AggregateReport {
        pooled_confusion: pooled,
        overall,
        per_muscle,
    })
}
