//! Seeded synthetic studies: CT-like volumes with ellipsoidal lesions,
//! their masks, labels and study entries, plus file writers for fixtures.

mod fixture;
mod writers;

pub use fixture::{reference_cohort, REFERENCE_IMAGES, REFERENCE_LESIONS, REFERENCE_PATIENTS};
pub use writers::{gzip_bytes, write_dicom_series, write_nifti, write_nifti_mask, write_nifti_with, NiftiEncoding};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{MutationClass, MutationLabels, StudyEntry, StudyLesion};
use crate::volume::{AnnotationMask, Geometry, GeometryError, Volume};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("could not place lesion {lesion} of {patient_id} after {attempts} attempts")]
    PlacementOverflow {
        patient_id: String,
        lesion: usize,
        attempts: usize,
    },
    #[error("value not representable: {0}")]
    NotRepresentable(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Placement attempts per lesion before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 200;

/// Minimum number of background voxels between two lesions, in every
/// direction, so they stay separate 26-connected components.
pub const LESION_GAP_VOXELS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_patients: usize,
    /// Inclusive range.
    pub lesions_per_patient: (usize, usize),
    /// Inclusive range for each semi-axis, in mm.
    pub semi_axis_mm: (f64, f64),
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub parenchyma_hu: f64,
    pub noise_sd_hu: f64,
    pub lesion_hu: f64,
    pub texture_amplitude_hu: f64,
    /// Relative frequency of the primary mutation, NRAS..OTHER.
    pub class_weights: [f64; 5],
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 20,
            lesions_per_patient: (1, 3),
            semi_axis_mm: (5.0, 12.0),
            dims: [96, 96, 32],
            spacing: [0.75, 0.75, 2.0],
            parenchyma_hu: 60.0,
            noise_sd_hu: 8.0,
            lesion_hu: 15.0,
            texture_amplitude_hu: 35.0,
            class_weights: [6.0, 34.0, 3.0, 14.0, 43.0],
            seed: 17,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        let (lo, hi) = self.lesions_per_patient;
        if lo > hi {
            return bad(format!("lesions_per_patient {lo}..{hi}"));
        }
        let (amin, amax) = self.semi_axis_mm;
        if !(amin > 0.0 && amin <= amax && amax.is_finite()) {
            return bad(format!("semi_axis_mm {amin}..{amax}"));
        }
        if self.dims.contains(&0) || self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad(format!("grid {:?} at {:?} mm", self.dims, self.spacing));
        }
        if !(self.noise_sd_hu >= 0.0 && self.noise_sd_hu.is_finite()) {
            return bad(format!("noise_sd_hu {}", self.noise_sd_hu));
        }
        if self.class_weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) || self.class_weights.iter().sum::<f64>() <= 0.0 {
            return bad(format!("class_weights {:?}", self.class_weights));
        }
        Ok(())
    }
}

/// Ground truth for one generated lesion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLesion {
    /// Matches the id 26-connected labeling assigns to this lesion.
    pub lesion_id: u32,
    pub texture_class: MutationClass,
    pub labels: MutationLabels,
    pub center_mm: [f64; 3],
    pub semi_axes_mm: [f64; 3],
    pub voxel_count: usize,
    /// Voxelized area per slice, pixels.
    pub slice_areas: BTreeMap<usize, usize>,
    /// Exact ellipse cross-section area per slice, pixels.
    pub analytic_areas: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPatient {
    pub patient_id: String,
    pub volume: Volume,
    pub mask: AnnotationMask,
    pub labels: MutationLabels,
    pub days_ct_to_biopsy: i64,
    pub lesions: Vec<SynthLesion>,
}

impl SynthPatient {
    pub fn study_entry(&self, volume_path: &str, mask_path: &str) -> StudyEntry {
        StudyEntry {
            patient_id: self.patient_id.clone(),
            volume_path: volume_path.to_owned(),
            mask_path: mask_path.to_owned(),
            days_ct_to_biopsy: self.days_ct_to_biopsy,
            labels: None,
            lesions: self
                .lesions
                .iter()
                .map(|l| StudyLesion {
                    lesion_id: l.lesion_id,
                    labels: l.labels,
                })
                .collect(),
        }
    }
}

pub fn synth_patient_id(index: usize) -> String {
    format!("synth{index:03}")
}

/// Cross-section area in pixels of an axis-aligned ellipsoid at height `z_mm`.
pub fn analytic_slice_area(center_mm: [f64; 3], semi_axes_mm: [f64; 3], z_mm: f64, spacing: [f64; 3]) -> f64 {
    let t = (z_mm - center_mm[2]) / semi_axes_mm[2];
    if t.abs() >= 1.0 {
        return 0.0;
    }
    PI * semi_axes_mm[0] * semi_axes_mm[1] * (1.0 - t * t) / (spacing[0] * spacing[1])
}

/// Ramanujan's approximation of an ellipse perimeter with semi-axes `a`, `b`.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let h = ((a - b) / (a + b)).powi(2);
    PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
}

/// Signed texture offset in [-1, 1]; depends only on class, voxel and phase.
pub fn texture(class: MutationClass, [x, y, z]: [usize; 3], phase: u32) -> f64 {
    let p = phase as usize;
    let on = match class {
        MutationClass::Nras => ((y + p) / 2).is_multiple_of(2),
        MutationClass::Kras => ((x + p) / 2).is_multiple_of(2),
        MutationClass::Braf => ((x + y + p) / 3).is_multiple_of(2),
        MutationClass::Pik3ca => (x / 3 + y / 3 + z + p).is_multiple_of(2),
        MutationClass::Other => return 0.0,
    };
    if on {
        1.0
    } else {
        -1.0
    }
}

fn draw_labels(rng: &mut ChaCha8Rng, weights: &WeightedIndex<f64>) -> (MutationClass, MutationLabels) {
    let primary = MutationClass::ALL[weights.sample(rng)];
    let mut labels = MutationLabels::single(primary);
    // Occasional co-mutations, PIK3CA with BRAF being the common pair.
    match primary {
        MutationClass::Pik3ca if rng.gen_bool(0.25) => labels.set(MutationClass::Braf, true),
        MutationClass::Kras if rng.gen_bool(0.1) => labels.set(MutationClass::Pik3ca, true),
        _ => {}
    }
    (primary, labels)
}

struct Placed {
    center_mm: [f64; 3],
    semi_axes_mm: [f64; 3],
    voxels: Vec<[usize; 3]>,
}

fn voxelize(center: [f64; 3], axes: [f64; 3], geometry: &Geometry) -> Vec<[usize; 3]> {
    let s = geometry.spacing;
    let range = |a: usize| {
        let lo = ((center[a] - axes[a]) / s[a]).ceil().max(0.0) as usize;
        let hi = (((center[a] + axes[a]) / s[a]).floor() as usize).min(geometry.dims[a] - 1);
        lo..=hi
    };
    let mut out = Vec::new();
    for z in range(2) {
        for y in range(1) {
            for x in range(0) {
                let q: f64 = [x, y, z]
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| ((i as f64 * s[a] - center[a]) / axes[a]).powi(2))
                    .sum();
                if q <= 1.0 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

fn place_lesion(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    geometry: &Geometry,
    forbidden: &[bool],
) -> Option<Placed> {
    let s = geometry.spacing;
    let (amin, amax) = cfg.semi_axis_mm;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let axes = [0, 1, 2].map(|_| if amin == amax { amin } else { rng.gen_range(amin..=amax) });
        // Keep a one-voxel background frame around the grid edge.
        let mut center = [0.0; 3];
        let mut fits = true;
        for a in 0..3 {
            let lo = axes[a] + s[a];
            let hi = (geometry.dims[a] as f64 - 2.0) * s[a] - axes[a];
            if lo > hi {
                fits = false;
                break;
            }
            center[a] = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
        }
        if !fits {
            return None;
        }
        let voxels = voxelize(center, axes, geometry);
        if voxels.is_empty() {
            continue;
        }
        if voxels.iter().any(|v| forbidden[geometry.index(v[0], v[1], v[2])]) {
            continue;
        }
        return Some(Placed {
            center_mm: center,
            semi_axes_mm: axes,
            voxels,
        });
    }
    None
}

fn mark_forbidden(forbidden: &mut [bool], geometry: &Geometry, voxels: &[[usize; 3]]) {
    let g = LESION_GAP_VOXELS;
    let d = geometry.dims;
    for v in voxels {
        for z in v[2].saturating_sub(g)..=(v[2] + g).min(d[2] - 1) {
            for y in v[1].saturating_sub(g)..=(v[1] + g).min(d[1] - 1) {
                for x in v[0].saturating_sub(g)..=(v[0] + g).min(d[0] - 1) {
                    forbidden[geometry.index(x, y, z)] = true;
                }
            }
        }
    }
}

/// Generate patient `index` of the cohort. Each patient has its own RNG
/// stream, so patients can be produced in any order or in parallel.
pub fn synth_patient(cfg: &SynthConfig, index: usize) -> Result<SynthPatient, SynthError> {
    cfg.validate()?;
    let patient_id = synth_patient_id(index);
    let geometry = Geometry::new(cfg.dims, cfg.spacing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);

    let weights = WeightedIndex::new(cfg.class_weights).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let (primary, labels) = draw_labels(&mut rng, &weights);
    let days_ct_to_biopsy = rng.gen_range(0..=90);
    let (lo, hi) = cfg.lesions_per_patient;
    let n_lesions = rng.gen_range(lo..=hi);

    let mut forbidden = vec![false; geometry.voxel_count()];
    let mut placed = Vec::with_capacity(n_lesions);
    for lesion in 0..n_lesions {
        let p = place_lesion(&mut rng, cfg, &geometry, &forbidden).ok_or_else(|| SynthError::PlacementOverflow {
            patient_id: patient_id.clone(),
            lesion,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        mark_forbidden(&mut forbidden, &geometry, &p.voxels);
        let phase: u32 = rng.gen_range(0..6);
        placed.push((p, phase));
    }

    // Labeling numbers components by their first voxel in scan order.
    let first = |p: &Placed| p.voxels.iter().map(|v| geometry.index(v[0], v[1], v[2])).min().unwrap();
    placed.sort_by_key(|(p, _)| first(p));

    let noise = Normal::new(0.0, cfg.noise_sd_hu).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let mut data: Vec<f32> = (0..geometry.voxel_count())
        .map(|_| (cfg.parenchyma_hu + noise.sample(&mut rng)) as f32)
        .collect();
    let mut mask = AnnotationMask::empty(geometry, patient_id.clone());
    let mut lesions = Vec::with_capacity(placed.len());
    for (k, (p, phase)) in placed.into_iter().enumerate() {
        let mut slice_areas = BTreeMap::new();
        for &v in &p.voxels {
            let i = geometry.index(v[0], v[1], v[2]);
            let n = data[i] as f64 - cfg.parenchyma_hu;
            data[i] = (cfg.lesion_hu + cfg.texture_amplitude_hu * texture(primary, v, phase) + n) as f32;
            mask.set(v[0], v[1], v[2], true);
            *slice_areas.entry(v[2]).or_insert(0usize) += 1;
        }
        let analytic_areas = slice_areas
            .keys()
            .map(|&z| (z, analytic_slice_area(p.center_mm, p.semi_axes_mm, z as f64 * cfg.spacing[2], cfg.spacing)))
            .collect();
        lesions.push(SynthLesion {
            lesion_id: k as u32 + 1,
            texture_class: primary,
            labels,
            center_mm: p.center_mm,
            semi_axes_mm: p.semi_axes_mm,
            voxel_count: p.voxels.len(),
            slice_areas,
            analytic_areas,
        });
    }

    Ok(SynthPatient {
        volume: Volume::new(geometry, data, patient_id.clone())?,
        mask,
        labels,
        days_ct_to_biopsy,
        lesions,
        patient_id,
    })
}

/// Generate the whole cohort in patient order.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Vec<SynthPatient>, SynthError> {
    (0..cfg.n_patients).map(|i| synth_patient(cfg, i)).collect()
}
