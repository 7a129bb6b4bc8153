//! Lesion crop extraction from a CT volume and its annotation mask.
//!
//! Each 26-connected lesion is opened slice by slice, slices whose opened
//! area does not exceed `epsilon` times the lesion's mean slice area are
//! dropped, and the survivors are cropped with a millimetre border, windowed
//! to 8 bits and resampled to a fixed square resolution.

mod components;
mod geometry;
mod morphology;
mod output;
mod pipeline;
mod resample;
mod window;

pub use components::{connected_components_26, LesionComponent};
pub use geometry::{border_pixels, expand_bbox, ExpandedRect, PixelRect};
pub use morphology::{dilate, erode, open_slice, BinarySlice};
pub use output::{crop_filename, decode_png, encode_png};
pub use pipeline::{
    open_component_slices, preprocess_patient, render_crops, select_slices, slice_included,
    LesionCrop, LesionSlices, PatientCrops, PreprocessConfig, SelectedSlice, SkippedLesion,
};
pub use resample::{bilinear_resize, square_crop_resample, square_region, SquareCrop, PAD_VALUE};
pub use window::{window_hu, window_slice};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Geometry(#[from] crate::volume::GeometryError),
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("png encoding failed: {0}")]
    Png(String),
}
