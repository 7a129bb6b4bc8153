use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{CropRecord, DatasetError, MutationClass, MutationLabels};

/// Phi coefficients between the five label columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    /// `None` where a column has zero variance. The diagonal is always 1.
    pub values: [[Option<f64>; 5]; 5],
}

impl CorrelationMatrix {
    pub fn get(&self, a: MutationClass, b: MutationClass) -> Option<f64> {
        self.values[a.index()][b.index()]
    }
}

fn phi(a: &[bool], b: &[bool]) -> Option<f64> {
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        match (x, y) {
            (true, true) => n11 += 1.0,
            (true, false) => n10 += 1.0,
            (false, true) => n01 += 1.0,
            (false, false) => n00 += 1.0,
        }
    }
    let denom = ((n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some(((n11 * n00 - n10 * n01) / denom).clamp(-1.0, 1.0))
    }
}

/// Correlation between mutation flags across lesions.
pub fn label_correlation(lesions: &[MutationLabels]) -> Result<CorrelationMatrix, DatasetError> {
    if lesions.len() < 2 {
        return Err(DatasetError::TooFewLesions(lesions.len()));
    }
    let columns: Vec<Vec<bool>> = MutationClass::ALL
        .iter()
        .map(|&c| lesions.iter().map(|l| l.get(c)).collect())
        .collect();
    let mut values = [[None; 5]; 5];
    for i in 0..5 {
        values[i][i] = Some(1.0);
        for j in i + 1..5 {
            let v = phi(&columns[i], &columns[j]);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CorrelationMatrix { values })
}

/// One label set per distinct (patient, lesion), in key order. The first
/// record seen for a lesion wins.
pub fn lesion_labels(records: &[CropRecord]) -> Vec<MutationLabels> {
    let mut by_lesion: BTreeMap<(&str, u32), MutationLabels> = BTreeMap::new();
    for r in records {
        by_lesion.entry((r.patient_id.as_str(), r.lesion_id)).or_insert(r.labels);
    }
    by_lesion.into_values().collect()
}

/// Percentage of patients, lesions and images carrying each flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDistribution {
    pub n_patients: usize,
    pub n_lesions: usize,
    pub n_images: usize,
    /// Indexed by [`MutationClass::index`].
    pub patients: [f64; 5],
    pub lesions: [f64; 5],
    pub images: [f64; 5],
}

fn percent(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// A patient or lesion carries a flag when any of its images does.
pub fn class_distribution(records: &[CropRecord]) -> Result<ClassDistribution, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyManifest);
    }
    let mut patients: BTreeMap<&str, [bool; 5]> = BTreeMap::new();
    let mut lesions: BTreeMap<(&str, u32), [bool; 5]> = BTreeMap::new();
    let mut images = [0usize; 5];
    for r in records {
        let flags = r.labels.as_array();
        let p = patients.entry(&r.patient_id).or_default();
        let l = lesions.entry((&r.patient_id, r.lesion_id)).or_default();
        for c in 0..5 {
            p[c] |= flags[c];
            l[c] |= flags[c];
            images[c] += flags[c] as usize;
        }
    }
    let count = |m: &mut dyn Iterator<Item = &[bool; 5]>| {
        let mut out = [0usize; 5];
        for flags in m {
            for c in 0..5 {
                out[c] += flags[c] as usize;
            }
        }
        out
    };
    let pc = count(&mut patients.values());
    let lc = count(&mut lesions.values());
    let (np, nl, ni) = (patients.len(), lesions.len(), records.len());
    Ok(ClassDistribution {
        n_patients: np,
        n_lesions: nl,
        n_images: ni,
        patients: pc.map(|c| percent(c, np)),
        lesions: lc.map(|c| percent(c, nl)),
        images: images.map(|c| percent(c, ni)),
    })
}

/// Distinct patient ids, sorted.
pub fn patient_ids(records: &[CropRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| r.patient_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
