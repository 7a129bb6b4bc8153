use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CropRecord, DatasetError, MutationClass};

/// Default share of images assigned to training.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;
/// Default number of candidate partitions scored per seed.
pub const DEFAULT_CANDIDATES: usize = 1000;
/// Allowed absolute deviation of the test image fraction from its target.
pub const TEST_FRACTION_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

/// A seeded patient-level train/test assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SplitPlanFile", try_from = "SplitPlanFile")]
pub struct SplitPlan {
    pub seed: u64,
    pub assignments: BTreeMap<String, Side>,
    /// Share of images on the train side.
    pub achieved_train_fraction: f64,
    /// Total-variation distance between the train and test class mixtures.
    pub label_divergence: f64,
    pub train_images: usize,
    pub test_images: usize,
    /// Which of the generated candidates was chosen.
    pub candidate_index: usize,
    pub candidates: usize,
}

impl SplitPlan {
    pub fn side(&self, patient_id: &str) -> Option<Side> {
        self.assignments.get(patient_id).copied()
    }

    pub fn patients(&self, side: Side) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|(_, &s)| s == side)
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Records of `manifest` on `side`, in manifest order.
    pub fn select<'a>(&self, manifest: &'a [CropRecord], side: Side) -> Vec<&'a CropRecord> {
        manifest
            .iter()
            .filter(|r| self.side(&r.patient_id) == Some(side))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitStats {
    achieved_train_fraction: f64,
    label_divergence: f64,
    train_images: usize,
    test_images: usize,
    candidate_index: usize,
    candidates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitPlanFile {
    seed: u64,
    train: Vec<String>,
    test: Vec<String>,
    stats: SplitStats,
}

impl From<SplitPlan> for SplitPlanFile {
    fn from(p: SplitPlan) -> Self {
        SplitPlanFile {
            seed: p.seed,
            train: p.patients(Side::Train),
            test: p.patients(Side::Test),
            stats: SplitStats {
                achieved_train_fraction: p.achieved_train_fraction,
                label_divergence: p.label_divergence,
                train_images: p.train_images,
                test_images: p.test_images,
                candidate_index: p.candidate_index,
                candidates: p.candidates,
            },
        }
    }
}

impl TryFrom<SplitPlanFile> for SplitPlan {
    type Error = String;

    fn try_from(f: SplitPlanFile) -> Result<Self, String> {
        let mut assignments = BTreeMap::new();
        for (side, list) in [(Side::Train, f.train), (Side::Test, f.test)] {
            for p in list {
                if assignments.insert(p.clone(), side).is_some() {
                    return Err(format!("patient {p} assigned twice"));
                }
            }
        }
        Ok(SplitPlan {
            seed: f.seed,
            assignments,
            achieved_train_fraction: f.stats.achieved_train_fraction,
            label_divergence: f.stats.label_divergence,
            train_images: f.stats.train_images,
            test_images: f.stats.test_images,
            candidate_index: f.stats.candidate_index,
            candidates: f.stats.candidates,
        })
    }
}

/// One random patient partition considered by [`make_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub index: usize,
    pub test_patients: BTreeSet<String>,
    pub test_fraction: f64,
    /// Test fraction within tolerance and both sides nonempty.
    pub feasible: bool,
}

struct PatientStats {
    images: usize,
    class_counts: [usize; 5],
}

fn patient_stats(records: &[CropRecord]) -> BTreeMap<&str, PatientStats> {
    let mut out: BTreeMap<&str, PatientStats> = BTreeMap::new();
    for r in records {
        let s = out.entry(&r.patient_id).or_insert(PatientStats {
            images: 0,
            class_counts: [0; 5],
        });
        s.images += 1;
        for c in r.labels.positives() {
            s.class_counts[c.index()] += 1;
        }
    }
    out
}

/// Positive-label mass per class, normalized to sum to one.
fn class_mixture(counts: &[usize; 5]) -> [f64; 5] {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return [0.0; 5];
    }
    counts.map(|c| c as f64 / total as f64)
}

/// Total-variation distance between the train and test class mixtures.
pub fn label_divergence(records: &[CropRecord], test_patients: &BTreeSet<String>) -> f64 {
    let mut train = [0usize; 5];
    let mut test = [0usize; 5];
    for r in records {
        let side = if test_patients.contains(&r.patient_id) { &mut test } else { &mut train };
        for c in r.labels.positives() {
            side[c.index()] += 1;
        }
    }
    let (p, q) = (class_mixture(&train), class_mixture(&test));
    0.5 * MutationClass::ALL
        .iter()
        .map(|c| (p[c.index()] - q[c.index()]).abs())
        .sum::<f64>()
}

/// Generate `m` seeded candidate partitions.
///
/// Each candidate shuffles the patients and moves them to the test side
/// until the test image share reaches `1 - train_fraction`; the last patient
/// is kept only if that lands closer to the target.
pub fn split_candidates(
    records: &[CropRecord],
    seed: u64,
    train_fraction: f64,
    m: usize,
) -> Result<Vec<SplitCandidate>, DatasetError> {
    let stats = patient_stats(records);
    if stats.len() < 2 {
        return Err(DatasetError::TooFewPatients(stats.len()));
    }
    if m == 0 {
        return Err(DatasetError::InvalidArgument("candidate count must be >= 1".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let total = records.len() as f64;
    let target = 1.0 - train_fraction;
    let patients: Vec<&str> = stats.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    for index in 0..m {
        let mut order = patients.clone();
        order.shuffle(&mut rng);
        let mut taken = 0usize;
        let mut images = 0usize;
        while taken < order.len() && (images as f64) < target * total {
            images += stats[order[taken]].images;
            taken += 1;
        }
        if taken > 1 {
            let last = stats[order[taken - 1]].images;
            let with = (images as f64 / total - target).abs();
            let without = ((images - last) as f64 / total - target).abs();
            if without < with {
                taken -= 1;
                images -= last;
            }
        }
        let test_fraction = images as f64 / total;
        let feasible =
            taken >= 1 && taken < order.len() && (test_fraction - target).abs() <= TEST_FRACTION_TOLERANCE + 1e-12;
        out.push(SplitCandidate {
            index,
            test_patients: order[..taken].iter().map(|p| p.to_string()).collect(),
            test_fraction,
            feasible,
        });
    }
    Ok(out)
}

/// Pick the feasible candidate with the smallest label divergence, the
/// lowest index winning ties.
pub fn make_split(
    records: &[CropRecord],
    seed: u64,
    train_fraction: f64,
    m: usize,
) -> Result<SplitPlan, DatasetError> {
    let candidates = split_candidates(records, seed, train_fraction, m)?;
    let target = 1.0 - train_fraction;
    let mut best: Option<(&SplitCandidate, f64)> = None;
    for c in candidates.iter().filter(|c| c.feasible) {
        let d = label_divergence(records, &c.test_patients);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c, d));
        }
    }
    let Some((chosen, divergence)) = best else {
        let closest = candidates
            .iter()
            .map(|c| c.test_fraction)
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .unwrap_or(0.0);
        return Err(DatasetError::NoFeasibleSplit {
            closest_test_fraction: closest,
        });
    };
    let assignments: BTreeMap<String, Side> = patient_stats(records)
        .keys()
        .map(|p| {
            let side = if chosen.test_patients.contains(*p) { Side::Test } else { Side::Train };
            (p.to_string(), side)
        })
        .collect();
    let test_images = records
        .iter()
        .filter(|r| chosen.test_patients.contains(&r.patient_id))
        .count();
    Ok(SplitPlan {
        seed,
        assignments,
        achieved_train_fraction: 1.0 - chosen.test_fraction,
        label_divergence: divergence,
        train_images: records.len() - test_images,
        test_images,
        candidate_index: chosen.index,
        candidates: m,
    })
}
