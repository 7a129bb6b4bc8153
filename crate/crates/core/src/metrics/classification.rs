use serde::{Deserialize, Serialize};

use super::{check_shape, MetricsError};

/// Default decision threshold; a score must exceed it strictly.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub fn binarize(scores: &[Vec<f64>], threshold: f64) -> Vec<Vec<bool>> {
    scores
        .iter()
        .map(|row| row.iter().map(|&s| s > threshold).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn from_pairs(truth: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (y, p) in truth {
            match (y, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    /// One set of counts per class column.
    pub fn per_class(y: &[Vec<bool>], pred: &[Vec<bool>]) -> Result<Vec<ConfusionCounts>, MetricsError> {
        let classes = check_shape(y, pred)?;
        Ok((0..classes)
            .map(|c| ConfusionCounts::from_pairs(y.iter().zip(pred).map(|(a, b)| (a[c], b[c]))))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassF1 {
    pub f1: f64,
    /// No positives in truth or prediction; `f1` is reported as 0.
    pub degenerate: bool,
}

pub fn f1_from_counts(c: &ConfusionCounts) -> ClassF1 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        ClassF1 { f1: 0.0, degenerate: true }
    } else {
        ClassF1 {
            f1: 2.0 * c.tp as f64 / denom as f64,
            degenerate: false,
        }
    }
}

/// `2tp / (2tp + fp + fn)` per class.
pub fn f1_per_class(y: &[Vec<bool>], pred: &[Vec<bool>]) -> Result<Vec<ClassF1>, MetricsError> {
    Ok(ConfusionCounts::per_class(y, pred)?.iter().map(f1_from_counts).collect())
}

/// Fraction of mismatched label bits.
pub fn hamming(y: &[Vec<bool>], pred: &[Vec<bool>]) -> Result<f64, MetricsError> {
    let classes = check_shape(y, pred)?;
    let bits = y.len() * classes;
    if bits == 0 {
        return Err(MetricsError::Empty);
    }
    let wrong: usize = y
        .iter()
        .zip(pred)
        .map(|(a, b)| a.iter().zip(b).filter(|(p, q)| p != q).count())
        .sum();
    Ok(wrong as f64 / bits as f64)
}

/// `(tn / (tn + fp), tp / (tp + fn))`, `None` where the denominator is 0.
pub fn spec_sens(c: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    (ratio(c.tn, c.tn + c.fp), ratio(c.tp, c.tp + c.fn_))
}
