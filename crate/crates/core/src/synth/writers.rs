use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;

use crate::volume::{AnnotationMask, NiftiDatatype, RescaleParams, Volume, TRANSFER_SYNTAX_EXPLICIT_LE};

use super::SynthError;

const VOX_OFFSET: usize = 352;

/// On-disk representation for [`write_nifti_with`]. Stored values are
/// `(hu - intercept) / slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiftiEncoding {
    pub datatype: NiftiDatatype,
    pub slope: f64,
    pub intercept: f64,
}

impl NiftiEncoding {
    pub const FLOAT32: NiftiEncoding = NiftiEncoding {
        datatype: NiftiDatatype::Float32,
        slope: 1.0,
        intercept: 0.0,
    };

    /// Signed 16-bit storage with the usual CT offset.
    pub const CT_INT16: NiftiEncoding = NiftiEncoding {
        datatype: NiftiDatatype::Int16,
        slope: 1.0,
        intercept: -1024.0,
    };
}

fn header(dims: [usize; 3], spacing: [f64; 3], enc: NiftiEncoding) -> Result<Vec<u8>, SynthError> {
    let mut h = vec![0u8; VOX_OFFSET];
    h[0..4].copy_from_slice(&348i32.to_le_bytes());
    let mut dim = [1i16; 8];
    dim[0] = 3;
    for a in 0..3 {
        dim[a + 1] = i16::try_from(dims[a])
            .map_err(|_| SynthError::NotRepresentable(format!("dimension {} exceeds NIfTI-1 range", dims[a])))?;
    }
    for (i, d) in dim.iter().enumerate() {
        h[40 + 2 * i..42 + 2 * i].copy_from_slice(&d.to_le_bytes());
    }
    h[70..72].copy_from_slice(&enc.datatype.code().to_le_bytes());
    h[72..74].copy_from_slice(&enc.datatype.bitpix().to_le_bytes());
    let mut pixdim = [1f32; 8];
    // pixdim is float32 in the format; spacings like 0.8 come back rounded.
    for a in 0..3 {
        pixdim[a + 1] = spacing[a] as f32;
    }
    for (i, p) in pixdim.iter().enumerate() {
        h[76 + 4 * i..80 + 4 * i].copy_from_slice(&p.to_le_bytes());
    }
    h[108..112].copy_from_slice(&(VOX_OFFSET as f32).to_le_bytes());
    h[112..116].copy_from_slice(&(enc.slope as f32).to_le_bytes());
    h[116..120].copy_from_slice(&(enc.intercept as f32).to_le_bytes());
    // xyzt_units: millimetres
    h[123] = 2;
    h[344..348].copy_from_slice(b"n+1\0");
    Ok(h)
}

fn encode_value(hu: f64, enc: NiftiEncoding, out: &mut Vec<u8>) -> Result<(), SynthError> {
    let stored = (hu - enc.intercept) / enc.slope;
    let bad = || SynthError::NotRepresentable(format!("{hu} HU as {:?}", enc.datatype));
    let decoded = match enc.datatype {
        NiftiDatatype::Uint8 => {
            let r = stored.round();
            if !(0.0..=255.0).contains(&r) {
                return Err(bad());
            }
            out.push(r as u8);
            r
        }
        NiftiDatatype::Int16 => {
            let r = stored.round();
            if !(i16::MIN as f64..=i16::MAX as f64).contains(&r) {
                return Err(bad());
            }
            out.extend_from_slice(&(r as i16).to_le_bytes());
            r
        }
        NiftiDatatype::Int32 => {
            let r = stored.round();
            if !(i32::MIN as f64..=i32::MAX as f64).contains(&r) {
                return Err(bad());
            }
            out.extend_from_slice(&(r as i32).to_le_bytes());
            r
        }
        NiftiDatatype::Float32 => {
            let s = stored as f32;
            out.extend_from_slice(&s.to_le_bytes());
            s as f64
        }
        NiftiDatatype::Float64 => {
            out.extend_from_slice(&stored.to_le_bytes());
            stored
        }
    };
    // The reader applies the header's float32 slope and intercept.
    let back = decoded * (enc.slope as f32) as f64 + (enc.intercept as f32) as f64;
    if back as f32 != hu as f32 {
        return Err(bad());
    }
    Ok(())
}

/// Single-stream NIfTI-1 (`n+1`) with float32 voxels. Voxel values read
/// back bit-exact, spacings whenever they are float32 values.
pub fn write_nifti(volume: &Volume) -> Vec<u8> {
    write_nifti_with(volume, NiftiEncoding::FLOAT32).expect("float32 holds every volume value")
}

/// Single-stream NIfTI-1 in the given encoding. Fails if any voxel would not
/// decode back to the same float32 HU value.
pub fn write_nifti_with(volume: &Volume, enc: NiftiEncoding) -> Result<Vec<u8>, SynthError> {
    if enc.slope == 0.0 || !enc.slope.is_finite() || !enc.intercept.is_finite() {
        return Err(SynthError::InvalidConfig(format!("rescale {}/{}", enc.slope, enc.intercept)));
    }
    let mut out = header(volume.dims(), volume.spacing(), enc)?;
    out.reserve(volume.data().len() * enc.datatype.byte_size());
    for &v in volume.data() {
        encode_value(v as f64, enc, &mut out)?;
    }
    Ok(out)
}

/// uint8 NIfTI-1 mask with values 0/1.
pub fn write_nifti_mask(mask: &AnnotationMask) -> Vec<u8> {
    let enc = NiftiEncoding {
        datatype: NiftiDatatype::Uint8,
        slope: 1.0,
        intercept: 0.0,
    };
    let mut out = header(mask.dims(), mask.spacing(), enc).expect("mask geometry fits NIfTI-1");
    out.extend_from_slice(mask.data());
    out
}

pub fn gzip_bytes(bytes: &[u8]) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::fast());
    enc.write_all(bytes).expect("writing to memory");
    enc.finish().expect("writing to memory")
}

fn element(out: &mut Vec<u8>, tag: (u16, u16), vr: &[u8; 2], value: &[u8]) {
    let mut value = value.to_vec();
    if value.len() % 2 == 1 {
        value.push(if vr == b"UI" || vr == b"OB" { 0 } else { b' ' });
    }
    out.extend_from_slice(&tag.0.to_le_bytes());
    out.extend_from_slice(&tag.1.to_le_bytes());
    out.extend_from_slice(vr);
    if matches!(vr, b"OB" | b"OW" | b"SQ" | b"UN" | b"UT") {
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    } else {
        out.extend_from_slice(&(value.len() as u16).to_le_bytes());
    }
    out.extend_from_slice(&value);
}

/// One Explicit VR Little Endian file per axial slice, signed 16-bit pixels.
///
/// Slice `k` sits at z = `k * sz`. Fails if a voxel is not an integer
/// multiple of the rescale step.
pub fn write_dicom_series(volume: &Volume, rescale: RescaleParams) -> Result<Vec<Vec<u8>>, SynthError> {
    let [nx, ny, nz] = volume.dims();
    let [sx, sy, sz] = volume.spacing();
    if nx > u16::MAX as usize || ny > u16::MAX as usize {
        return Err(SynthError::NotRepresentable(format!("{nx}x{ny} slice")));
    }
    let (slope, intercept) = (rescale.slope(), rescale.intercept());
    let mut files = Vec::with_capacity(nz);
    for z in 0..nz {
        let mut pixels = Vec::with_capacity(nx * ny * 2);
        for &hu in volume.slice(z) {
            let stored = ((hu as f64 - intercept) / slope).round();
            if !(i16::MIN as f64..=i16::MAX as f64).contains(&stored) || ((stored * slope + intercept) as f32) != hu {
                return Err(SynthError::NotRepresentable(format!("{hu} HU with slope {slope} intercept {intercept}")));
            }
            pixels.extend_from_slice(&(stored as i16).to_le_bytes());
        }

        let mut out = vec![0u8; 128];
        out.extend_from_slice(b"DICM");
        element(&mut out, (0x0002, 0x0010), b"UI", TRANSFER_SYNTAX_EXPLICIT_LE.as_bytes());
        element(&mut out, (0x0018, 0x0050), b"DS", sz.to_string().as_bytes());
        element(&mut out, (0x0020, 0x0032), b"DS", format!("0\\0\\{}", z as f64 * sz).as_bytes());
        element(&mut out, (0x0028, 0x0010), b"US", &(ny as u16).to_le_bytes());
        element(&mut out, (0x0028, 0x0011), b"US", &(nx as u16).to_le_bytes());
        // Row spacing first, then column spacing.
        element(&mut out, (0x0028, 0x0030), b"DS", format!("{sy}\\{sx}").as_bytes());
        element(&mut out, (0x0028, 0x0100), b"US", &16u16.to_le_bytes());
        element(&mut out, (0x0028, 0x0103), b"US", &1u16.to_le_bytes());
        element(&mut out, (0x0028, 0x1052), b"DS", intercept.to_string().as_bytes());
        element(&mut out, (0x0028, 0x1053), b"DS", slope.to_string().as_bytes());
        element(&mut out, (0x7FE0, 0x0010), b"OW", &pixels);
        files.push(out);
    }
    Ok(files)
}
