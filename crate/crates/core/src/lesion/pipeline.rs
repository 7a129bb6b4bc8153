use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::components::{connected_components_26, LesionComponent};
use super::geometry::{expand_bbox, PixelRect};
use super::morphology::{open_slice, BinarySlice};
use super::resample::square_crop_resample;
use super::window::window_slice;
use super::ExtractError;
use crate::volume::{AnnotationMask, Volume};

/// Parameters of the crop extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Slice-inclusion threshold relative to the lesion's mean slice area.
    pub epsilon: f64,
    /// Context border around the lesion, in millimetres.
    pub border_mm: f64,
    /// Output side length in pixels.
    pub resolution: usize,
    pub window_center: f64,
    pub window_width: f64,
    /// Average raw (pre-opening) slice areas instead of opened ones.
    #[serde(default)]
    pub mean_pre_opening: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.4,
            border_mm: 10.0,
            resolution: 128,
            window_center: 40.0,
            window_width: 400.0,
            mean_pre_opening: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        let bad = |msg: String| Err(ExtractError::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1)", self.epsilon));
        }
        if !(self.border_mm >= 0.0 && self.border_mm.is_finite()) {
            return bad(format!("border_mm {} must be >= 0", self.border_mm));
        }
        if self.resolution < 8 {
            return bad(format!("resolution {} below 8", self.resolution));
        }
        if !(self.window_width > 0.0 && self.window_width.is_finite() && self.window_center.is_finite()) {
            return bad(format!("window width {} must be > 0", self.window_width));
        }
        Ok(())
    }
}

/// `area > epsilon * mean_area`, strictly.
#[inline]
pub fn slice_included(area: usize, mean_area: f64, epsilon: f64) -> bool {
    area as f64 > epsilon * mean_area
}

/// A fixed-resolution 8-bit crop of one lesion on one axial slice.
#[derive(Debug, Clone, PartialEq)]
pub struct LesionCrop {
    pub patient_id: String,
    pub lesion_id: u32,
    pub slice_index: usize,
    pub resolution: usize,
    /// Row-major `resolution × resolution` gray levels.
    pub pixels: Vec<u8>,
    /// Border-expanded lesion box in slice pixel coordinates, clamped to the slice.
    pub bbox_source: PixelRect,
    pub pad_fraction: f64,
    /// Lesion area on this slice after opening, before border expansion.
    pub slice_area: usize,
    /// Mean slice area the inclusion test compared against.
    pub mean_area: f64,
}

/// A lesion dropped from the output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedLesion {
    pub lesion_id: u32,
    pub voxels: usize,
    pub reason: String,
}

/// A slice chosen for emission, before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedSlice {
    pub lesion_id: u32,
    pub slice_index: usize,
    pub lesion_bbox: PixelRect,
    pub expanded_bbox: PixelRect,
    pub slice_area: usize,
    pub mean_area: f64,
}

/// Per-slice statistics of one lesion after opening.
#[derive(Debug, Clone, PartialEq)]
pub struct LesionSlices {
    pub lesion_id: u32,
    /// slice index -> (opened area, opened bbox); slices that vanished are absent.
    pub opened: BTreeMap<usize, (usize, PixelRect)>,
    pub raw_mean_area: f64,
    pub opened_mean_area: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatientCrops {
    pub crops: Vec<LesionCrop>,
    pub skipped: Vec<SkippedLesion>,
}

/// Opens every slice of one component in isolation from other lesions.
pub fn open_component_slices(component: &LesionComponent, width: usize, height: usize) -> LesionSlices {
    let mut by_slice: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for v in &component.voxels {
        by_slice.entry(v[2]).or_default().push((v[0], v[1]));
    }
    let mut opened = BTreeMap::new();
    for (z, pixels) in by_slice {
        // Work on the lesion's box plus a one-pixel margin; a 3x3 opening
        // never reaches further.
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for &(x, y) in &pixels {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x + 1);
            y1 = y1.max(y + 1);
        }
        let (wx0, wy0) = (x0.saturating_sub(1), y0.saturating_sub(1));
        let (wx1, wy1) = ((x1 + 1).min(width), (y1 + 1).min(height));
        let mut local = BinarySlice::new(wx1 - wx0, wy1 - wy0);
        for &(x, y) in &pixels {
            local.set(x - wx0, y - wy0, true);
        }
        let o = open_slice(&local);
        let area = o.area();
        if let Some((bx0, by0, bx1, by1)) = o.bounding_box() {
            let rect = PixelRect::new(
                (bx0 + wx0) as i64,
                (by0 + wy0) as i64,
                (bx1 + wx0) as i64,
                (by1 + wy0) as i64,
            );
            opened.insert(z, (area, rect));
        }
    }
    let opened_mean_area = if opened.is_empty() {
        None
    } else {
        Some(opened.values().map(|(a, _)| *a as f64).sum::<f64>() / opened.len() as f64)
    };
    LesionSlices {
        lesion_id: component.label_id,
        opened,
        raw_mean_area: component.mean_area,
        opened_mean_area,
    }
}

/// Labeling, per-slice opening and slice inclusion for one patient.
pub fn select_slices(
    mask: &AnnotationMask,
    cfg: &PreprocessConfig,
) -> Result<(Vec<SelectedSlice>, Vec<SkippedLesion>), ExtractError> {
    cfg.validate()?;
    let [nx, ny, _] = mask.dims();
    let [sx, sy, _] = mask.spacing();
    let mut selected = Vec::new();
    let mut skipped = Vec::new();
    for component in connected_components_26(mask) {
        let slices = open_component_slices(&component, nx, ny);
        let Some(opened_mean) = slices.opened_mean_area else {
            log::warn!(
                "event=lesion_skipped lesion_id={} voxels={} reason=vanished_after_opening",
                component.label_id,
                component.len()
            );
            skipped.push(SkippedLesion {
                lesion_id: component.label_id,
                voxels: component.len(),
                reason: "vanished after opening".to_owned(),
            });
            continue;
        };
        let mean_area = if cfg.mean_pre_opening {
            slices.raw_mean_area
        } else {
            opened_mean
        };
        for (&z, &(area, rect)) in &slices.opened {
            if !slice_included(area, mean_area, cfg.epsilon) {
                continue;
            }
            let expanded = expand_bbox(rect, cfg.border_mm, (sx, sy), (nx, ny));
            selected.push(SelectedSlice {
                lesion_id: component.label_id,
                slice_index: z,
                lesion_bbox: rect,
                expanded_bbox: expanded.clamped,
                slice_area: area,
                mean_area,
            });
        }
    }
    Ok((selected, skipped))
}

/// Window and resample the selected slices at `resolution`.
pub fn render_crops(
    volume: &Volume,
    patient_id: &str,
    selected: &[SelectedSlice],
    cfg: &PreprocessConfig,
    resolution: usize,
) -> Vec<LesionCrop> {
    let [nx, ny, _] = volume.dims();
    let mut windowed: HashMap<usize, Vec<u8>> = HashMap::new();
    selected
        .iter()
        .map(|s| {
            let gray = windowed
                .entry(s.slice_index)
                .or_insert_with(|| window_slice(volume.slice(s.slice_index), cfg.window_center, cfg.window_width));
            let crop = square_crop_resample(gray, nx, ny, s.expanded_bbox, resolution);
            LesionCrop {
                patient_id: patient_id.to_owned(),
                lesion_id: s.lesion_id,
                slice_index: s.slice_index,
                resolution,
                pixels: crop.pixels,
                bbox_source: s.expanded_bbox,
                pad_fraction: crop.pad_fraction,
                slice_area: s.slice_area,
                mean_area: s.mean_area,
            }
        })
        .collect()
}

/// Full crop extraction for one patient at `cfg.resolution`.
///
/// Crops come out ordered by lesion id, then slice index.
pub fn preprocess_patient(
    volume: &Volume,
    mask: &AnnotationMask,
    cfg: &PreprocessConfig,
    patient_id: &str,
) -> Result<PatientCrops, ExtractError> {
    mask.check_congruent(volume)?;
    let (selected, skipped) = select_slices(mask, cfg)?;
    Ok(PatientCrops {
        crops: render_crops(volume, patient_id, &selected, cfg, cfg.resolution),
        skipped,
    })
}
