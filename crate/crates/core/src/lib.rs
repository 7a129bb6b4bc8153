//! Lesion-centred CT preprocessing and evaluation toolkit.
//!
//! The crate turns annotated CT volumes into fixed-resolution 2D lesion crops,
//! builds patient-disjoint train/test splits over the resulting manifests and
//! scores multi-label mutation predictions against them.
//!
//! Module map:
//!
//! * [`volume`] parses NIfTI-1 files and uncompressed DICOM series into
//!   Hounsfield-unit volumes and binary annotation masks.
//! * [`lesion`] labels lesions in 3D, cleans every slice and emits windowed crops.
//! * [`dataset`] holds the manifest model, study validation, split planning and
//!   training-set balancing.
//! * [`metrics`] implements F1, one-vs-rest AUC, Hamming loss and seed aggregation.
//! * [`synth`] generates deterministic synthetic studies and fixture files.
//! * [`cli`] wires everything into the `hepacrop` executable.

pub mod cli;
pub mod dataset;
pub mod lesion;
pub mod metrics;
pub mod synth;
pub mod volume;

pub use dataset::{CropRecord, MutationLabels, SplitPlan};
pub use lesion::{LesionCrop, PreprocessConfig};
pub use metrics::{MetricsReport, PredictionSet};
pub use volume::{AnnotationMask, Volume};

/// The five mutation seeds used when none are given on the command line.
pub const DEFAULT_SEEDS: [u64; 5] = [17, 42, 1337, 2022, 31337];
