//! CT volumes and annotation masks.
//!
//! Both grids use an x-fastest layout: voxel `(x, y, z)` lives at
//! `x + nx * (y + ny * z)`.

mod dicom;
mod nifti;

pub use dicom::{parse_dicom_series, TRANSFER_SYNTAX_EXPLICIT_LE};
pub use nifti::{parse_nifti, parse_nifti_mask, parse_nifti_pair, NiftiDatatype, NIFTI_HEADER_SIZE};

use thiserror::Error;

/// Errors raised while decoding NIfTI or DICOM inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("bad magic: expected \"n+1\" or \"ni1\", found {0:?}")]
    BadMagic(String),
    #[error("unsupported NIfTI datatype code {code} (bitpix {bitpix})")]
    UnsupportedDatatype { code: i16, bitpix: i16 },
    #[error("header/data length mismatch: expected {expected} bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-positive spacing {value} on axis {axis}")]
    NonPositiveSpacing { axis: usize, value: f64 },
    #[error("invalid dimensions {0:?}")]
    InvalidDims(Vec<i64>),
    #[error("stream truncated: {0}")]
    Truncated(&'static str),
    #[error("gzip decode failed: {0}")]
    Gzip(String),
    #[error("non-finite intensity at voxel {0}")]
    NonFinite(usize),
    #[error("invalid rescale slope {0}")]
    InvalidRescale(f64),
    #[error("not a DICOM part-10 stream (missing DICM marker)")]
    NotDicom,
    #[error("unsupported transfer syntax {0}")]
    UnsupportedTransferSyntax(String),
    #[error("missing required tag ({0:04X},{1:04X})")]
    MissingTag(u16, u16),
    #[error("malformed value for tag ({0:04X},{1:04X}): {2}")]
    MalformedValue(u16, u16, String),
    #[error("unsupported pixel encoding: {0}")]
    UnsupportedPixelFormat(String),
    #[error("inconsistent geometry across slices: {0}")]
    InconsistentGeometry(String),
    #[error("duplicate slice position z={0}")]
    DuplicateSlicePosition(f64),
    #[error("empty DICOM series")]
    EmptySeries,
}

/// Errors raised when constructing grids by hand.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {axis} is zero")]
    ZeroDim { axis: usize },
    #[error("spacing {value} on axis {axis} is not strictly positive")]
    BadSpacing { axis: usize, value: f64 },
    #[error("data length {actual} does not match {expected} voxels")]
    DataLength { expected: usize, actual: usize },
    #[error("non-finite value at voxel {0}")]
    NonFinite(usize),
    #[error("mask value {value} at voxel {index} is not 0 or 1")]
    NonBinary { index: usize, value: u8 },
    #[error("volume {volume:?} and mask {mask:?} are not congruent")]
    NotCongruent { volume: Geometry, mask: Geometry },
}

/// Voxel counts and physical spacing (mm per voxel) of a 3D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self, GeometryError> {
        for (axis, &d) in dims.iter().enumerate() {
            if d == 0 {
                return Err(GeometryError::ZeroDim { axis });
            }
        }
        for (axis, &s) in spacing.iter().enumerate() {
            if !(s.is_finite() && s > 0.0) {
                return Err(GeometryError::BadSpacing { axis, value: s });
            }
        }
        Ok(Self { dims, spacing })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn slice_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let rest = index / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Same dims and spacing up to a relative tolerance of 1e-6 on spacing,
    /// which absorbs float32 header round-off.
    pub fn congruent_with(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && self
                .spacing
                .iter()
                .zip(other.spacing.iter())
                .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()))
    }
}

/// A CT volume in Hounsfield units.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    geometry: Geometry,
    data: Vec<f32>,
    source_id: String,
}

impl Volume {
    pub fn new(
        geometry: Geometry,
        data: Vec<f32>,
        source_id: impl Into<String>,
    ) -> Result<Self, GeometryError> {
        let expected = geometry.voxel_count();
        if data.len() != expected {
            return Err(GeometryError::DataLength {
                expected,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(Self {
            geometry,
            data,
            source_id: source_id.into(),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.geometry.index(x, y, z)]
    }

    /// HU values of one axial slice, x-fastest.
    pub fn slice(&self, z: usize) -> &[f32] {
        let len = self.geometry.slice_len();
        &self.data[z * len..(z + 1) * len]
    }
}

/// A binary annotation grid congruent with a [`Volume`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMask {
    geometry: Geometry,
    data: Vec<u8>,
    source_id: String,
}

impl AnnotationMask {
    pub fn new(
        geometry: Geometry,
        data: Vec<u8>,
        source_id: impl Into<String>,
    ) -> Result<Self, GeometryError> {
        let expected = geometry.voxel_count();
        if data.len() != expected {
            return Err(GeometryError::DataLength {
                expected,
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(GeometryError::NonBinary { index, value });
        }
        Ok(Self {
            geometry,
            data,
            source_id: source_id.into(),
        })
    }

    /// An all-background mask.
    pub fn empty(geometry: Geometry, source_id: impl Into<String>) -> Self {
        Self {
            data: vec![0; geometry.voxel_count()],
            geometry,
            source_id: source_id.into(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.geometry.index(x, y, z)] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.geometry.index(x, y, z);
        self.data[i] = value as u8;
    }

    pub fn positive_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn check_congruent(&self, volume: &Volume) -> Result<(), GeometryError> {
        if volume.geometry.congruent_with(&self.geometry) {
            Ok(())
        } else {
            Err(GeometryError::NotCongruent {
                volume: volume.geometry,
                mask: self.geometry,
            })
        }
    }
}

/// Linear map from stored integers to HU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleParams {
    slope: f64,
    intercept: f64,
}

impl RescaleParams {
    pub const IDENTITY: RescaleParams = RescaleParams {
        slope: 1.0,
        intercept: 0.0,
    };

    pub fn new(slope: f64, intercept: f64) -> Result<Self, ParseError> {
        if slope == 0.0 || !slope.is_finite() || !intercept.is_finite() {
            return Err(ParseError::InvalidRescale(slope));
        }
        Ok(Self { slope, intercept })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

/// `stored * slope + intercept`.
pub fn apply_rescale(stored: i64, params: RescaleParams) -> f64 {
    stored as f64 * params.slope + params.intercept
}
