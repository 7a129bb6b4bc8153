//! Scoring of multi-label predictions: per-class F1, specificity and
//! sensitivity, one-vs-rest AUC with support weights, Hamming loss and
//! Student-t intervals across seeds.
//!
//! Label and score matrices are row-per-sample slices of `Vec`s.

mod aggregate;
mod auc;
mod classification;
mod report;

pub use aggregate::{aggregate_ci, t_quantile_975, ConfidenceInterval};
pub use auc::{auc_binary, auc_ovr_weighted, weighted_average, WeightedAuc};
pub use classification::{
    binarize, f1_from_counts, f1_per_class, hamming, spec_sens, ClassF1, ConfusionCounts, DEFAULT_THRESHOLD,
};
pub use report::{
    aggregate_seeds, render_table, score_predictions, ClassScores, ClassSummary, MetricsReport, PredictionLine,
    PredictionSet, SeedScores, Summary,
};

use thiserror::Error;

use crate::dataset::{ClassSpace, DatasetError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("nothing to score")]
    Empty,
    #[error("every class lacks positives or negatives")]
    AllClassesDegenerate,
    #[error("need at least 2 values for an interval, found {0}")]
    TooFewSeeds(usize),
    #[error("no prediction for test crop {0}")]
    MissingPrediction(String),
    #[error("prediction for {0} which is not a test crop of this split")]
    UnexpectedPrediction(String),
    #[error("duplicate crop key {0}")]
    DuplicateKey(String),
    #[error("class space mismatch: expected {expected}, found {found}")]
    ClassSpaceMismatch { expected: ClassSpace, found: ClassSpace },
    #[error("test side mixes resolutions {0:?}")]
    MixedResolutions(Vec<u32>),
    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn shape_of<T>(m: &[Vec<T>]) -> Option<usize> {
    let cols = m.first().map_or(0, Vec::len);
    m.iter().all(|r| r.len() == cols).then_some(cols)
}

fn shape_check<A, B>(a: &[Vec<A>], b: &[Vec<B>]) -> Result<usize, MetricsError> {
    let err = || MetricsError::ShapeMismatch {
        left_rows: a.len(),
        left_cols: a.first().map_or(0, Vec::len),
        right_rows: b.len(),
        right_cols: b.first().map_or(0, Vec::len),
    };
    match (shape_of(a), shape_of(b)) {
        (Some(ca), Some(cb)) if ca == cb && a.len() == b.len() => Ok(ca),
        _ => Err(err()),
    }
}

pub(crate) fn check_shape(a: &[Vec<bool>], b: &[Vec<bool>]) -> Result<usize, MetricsError> {
    shape_check(a, b)
}

pub(crate) fn check_shape_scores(a: &[Vec<f64>], b: &[Vec<bool>]) -> Result<usize, MetricsError> {
    shape_check(a, b)
}
