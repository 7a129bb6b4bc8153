//! Manifest model, study checks, label statistics, patient-disjoint splits
//! and training-set balancing.

mod balance;
mod labels;
mod manifest;
mod split;
mod stats;
mod study;
mod validate;

pub use balance::{balance_train, balancing_keys, median_size, BalancedSample};
pub use labels::{group_labels_3, ClassSpace, GroupedLabels, MutationClass, MutationLabels};
pub use manifest::{read_jsonl, read_manifest, write_jsonl, write_manifest, CropKey, CropRecord};
pub use split::{
    label_divergence, make_split, split_candidates, Side, SplitCandidate, SplitPlan, DEFAULT_CANDIDATES,
    DEFAULT_TRAIN_FRACTION, TEST_FRACTION_TOLERANCE,
};
pub use stats::{class_distribution, label_correlation, lesion_labels, patient_ids, ClassDistribution, CorrelationMatrix};
pub use study::{StudyEntry, StudyLesion};
pub use validate::{validate_study, Violation, ViolationKind, MAX_DAYS_CT_TO_BIOPSY, MAX_SLICE_SPACING_MM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid JSON on line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("need at least 2 lesions, found {0}")]
    TooFewLesions(usize),
    #[error("need at least 2 patients, found {0}")]
    TooFewPatients(usize),
    #[error("record {0} has no positive label")]
    NoPositiveLabel(usize),
    #[error("no candidate split reaches the test-size window; closest test fraction {closest_test_fraction:.4}")]
    NoFeasibleSplit { closest_test_fraction: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
