//! Independent reference implementations and fixture generators shared by
//! the integration tests and the acceptance runner. They favour the most
//! literal formulation over speed.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use hepacrop::dataset::{CropRecord, MutationClass, MutationLabels};
use hepacrop::lesion::BinarySlice;
use hepacrop::volume::{AnnotationMask, Geometry};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Voxel = [usize; 3];

pub fn random_mask(rng: &mut ChaCha8Rng, max_side: usize) -> AnnotationMask {
    let dims = [0; 3].map(|_| rng.gen_range(1..=max_side));
    let density = rng.gen_range(0.02..0.6);
    let g = Geometry::new(dims, [1.0; 3]).unwrap();
    let data = (0..g.voxel_count()).map(|_| rng.gen_bool(density) as u8).collect();
    AnnotationMask::new(g, data, "rand").unwrap()
}

/// Components by breadth-first flood fill over a hash set of positives.
pub fn bfs_components(mask: &AnnotationMask) -> Vec<BTreeSet<Voxel>> {
    let [nx, ny, nz] = mask.dims();
    let mut remaining: HashSet<Voxel> = HashSet::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if mask.get(x, y, z) {
                    remaining.insert([x, y, z]);
                }
            }
        }
    }
    let mut out = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        remaining.remove(&start);
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let q = [v[0] as i64 + dx, v[1] as i64 + dy, v[2] as i64 + dz];
                        if q.iter().any(|&c| c < 0) {
                            continue;
                        }
                        let q = [q[0] as usize, q[1] as usize, q[2] as usize];
                        if remaining.remove(&q) {
                            comp.insert(q);
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Position of a voxel in x-fastest scan order.
pub fn scan_index(v: Voxel, dims: [usize; 3]) -> usize {
    v[0] + dims[0] * (v[1] + dims[1] * v[2])
}

pub fn random_slice(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinarySlice {
    let p = rng.gen_range(0.05..0.9);
    BinarySlice::from_vec(w, h, (0..w * h).map(|_| rng.gen_bool(p)).collect())
}

fn to_set(s: &BinarySlice) -> BTreeSet<(i64, i64)> {
    let mut out = BTreeSet::new();
    for y in 0..s.height() {
        for x in 0..s.width() {
            if s.get(x, y) {
                out.insert((x as i64, y as i64));
            }
        }
    }
    out
}

/// Opening as set algebra: erosion keeps points whose whole 3x3 translate
/// lies in the set, dilation is the union of 3x3 translates clipped to the
/// grid.
pub fn opening_oracle(s: &BinarySlice) -> BinarySlice {
    let set = to_set(s);
    let offsets: Vec<(i64, i64)> = (-1..=1).flat_map(|dy| (-1..=1).map(move |dx| (dx, dy))).collect();
    let eroded: BTreeSet<(i64, i64)> = set
        .iter()
        .copied()
        .filter(|&(x, y)| offsets.iter().all(|&(dx, dy)| set.contains(&(x + dx, y + dy))))
        .collect();
    let mut out = BinarySlice::new(s.width(), s.height());
    for &(x, y) in &eroded {
        for &(dx, dy) in &offsets {
            let (px, py) = (x + dx, y + dy);
            if px >= 0 && py >= 0 && (px as usize) < s.width() && (py as usize) < s.height() {
                out.set(px as usize, py as usize, true);
            }
        }
    }
    out
}

/// Window mapping via exact integer arithmetic for integer HU inputs:
/// gray = round(255 * (hu - lo) / w) with halves away from zero, clamped.
pub fn window_oracle_int(hu: i64, center: i64, width: i64) -> u8 {
    // lo = center - width / 2, kept doubled to stay integral.
    let num = 255 * (2 * hu - 2 * center + width);
    let den = 2 * width;
    if num <= 0 {
        return 0;
    }
    if num >= 255 * den {
        return 255;
    }
    ((2 * num + den) / (2 * den)) as u8
}

/// AUC as the fraction of positive-negative pairs ranked correctly, ties
/// counting one half.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

pub struct BruteCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

pub fn brute_counts(truth: &[bool], pred: &[bool]) -> BruteCounts {
    let count = |t: bool, p: bool| truth.iter().zip(pred).filter(|&(&a, &b)| a == t && b == p).count();
    BruteCounts {
        tp: count(true, true),
        fp: count(false, true),
        tn: count(false, false),
        fn_: count(true, false),
    }
}

/// F1 as the harmonic mean of precision and recall; 0 when undefined.
pub fn brute_f1(truth: &[bool], pred: &[bool]) -> f64 {
    let c = brute_counts(truth, pred);
    if c.tp == 0 {
        return 0.0;
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn brute_hamming(truth: &[Vec<bool>], pred: &[Vec<bool>]) -> f64 {
    let mut wrong = 0usize;
    let mut total = 0usize;
    for (t, p) in truth.iter().zip(pred) {
        for (a, b) in t.iter().zip(p) {
            total += 1;
            wrong += (a != b) as usize;
        }
    }
    wrong as f64 / total as f64
}

/// Two-sided 95% Student-t quantiles for 1..=30 degrees of freedom, from a
/// printed table.
pub const T_TABLE_975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
    2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

pub fn record(patient: &str, lesion: u32, slice: u32, labels: MutationLabels) -> CropRecord {
    CropRecord {
        patient_id: patient.to_owned(),
        lesion_id: lesion,
        slice_index: slice,
        image_path: format!("crops/{patient}_{lesion:03}_{slice:04}_64.png"),
        resolution: 64,
        labels,
        slice_spacing_mm: 1.25,
        days_ct_to_biopsy: 20,
    }
}

pub fn random_labels(rng: &mut ChaCha8Rng) -> MutationLabels {
    let weights = [6, 34, 3, 14, 43];
    let total: u32 = weights.iter().sum();
    let mut pick = rng.gen_range(0..total);
    let mut labels = MutationLabels::default();
    for (c, w) in MutationClass::ALL.iter().zip(weights) {
        if pick < w {
            labels.set(*c, true);
            break;
        }
        pick -= w;
    }
    if rng.gen_bool(0.1) {
        labels.set(MutationClass::ALL[rng.gen_range(0..5)], true);
    }
    labels
}

/// Manifest with `n_patients` patients, 1..=3 lesions each and 1..=6 slices
/// per lesion; one label set per patient.
pub fn random_manifest(rng: &mut ChaCha8Rng, n_patients: usize) -> Vec<CropRecord> {
    let mut out = Vec::new();
    for p in 0..n_patients {
        let pid = format!("P{p:03}");
        let labels = random_labels(rng);
        for l in 1..=rng.gen_range(1..=3u32) {
            for s in 0..rng.gen_range(1..=6u32) {
                out.push(record(&pid, l, s, labels));
            }
        }
    }
    out
}

/// Rarest positive class per record, ties to the earlier class.
pub fn rarest_key_oracle(records: &[CropRecord]) -> Vec<MutationClass> {
    let mut freq: BTreeMap<MutationClass, usize> = BTreeMap::new();
    for r in records {
        for c in MutationClass::ALL {
            if r.labels.get(c) {
                *freq.entry(c).or_default() += 1;
            }
        }
    }
    records
        .iter()
        .map(|r| {
            let mut best: Option<MutationClass> = None;
            for c in MutationClass::ALL {
                if r.labels.get(c) && best.is_none_or(|b| freq[&c] < freq[&b]) {
                    best = Some(c);
                }
            }
            best.unwrap()
        })
        .collect()
}

/// Median group size with halves rounded up for an even count.
pub fn median_oracle(sizes: &[usize]) -> usize {
    let mut s = sizes.to_vec();
    s.sort();
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        let sum = s[n / 2 - 1] + s[n / 2];
        sum / 2 + sum % 2
    }
}
