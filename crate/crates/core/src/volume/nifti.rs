use std::io::Read;

use flate2::read::GzDecoder;

use super::{AnnotationMask, Geometry, ParseError, Volume};

pub const NIFTI_HEADER_SIZE: usize = 348;

/// Voxel encodings accepted by the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiftiDatatype {
    Uint8,
    Int16,
    Int32,
    Float32,
    Float64,
}

impl NiftiDatatype {
    pub fn code(self) -> i16 {
        match self {
            NiftiDatatype::Uint8 => 2,
            NiftiDatatype::Int16 => 4,
            NiftiDatatype::Int32 => 8,
            NiftiDatatype::Float32 => 16,
            NiftiDatatype::Float64 => 64,
        }
    }

    pub fn bitpix(self) -> i16 {
        (self.byte_size() * 8) as i16
    }

    pub fn byte_size(self) -> usize {
        match self {
            NiftiDatatype::Uint8 => 1,
            NiftiDatatype::Int16 => 2,
            NiftiDatatype::Int32 | NiftiDatatype::Float32 => 4,
            NiftiDatatype::Float64 => 8,
        }
    }

    pub fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => NiftiDatatype::Uint8,
            4 => NiftiDatatype::Int16,
            8 => NiftiDatatype::Int32,
            16 => NiftiDatatype::Float32,
            64 => NiftiDatatype::Float64,
            _ => return None,
        })
    }
}

#[derive(Debug)]
struct Header {
    big_endian: bool,
    dims: [usize; 3],
    spacing: [f64; 3],
    datatype: NiftiDatatype,
    vox_offset: usize,
    slope: f64,
    intercept: f64,
}

struct Fields<'a> {
    bytes: &'a [u8],
    big_endian: bool,
}

impl Fields<'_> {
    fn i16(&self, off: usize) -> i16 {
        let b = [self.bytes[off], self.bytes[off + 1]];
        if self.big_endian {
            i16::from_be_bytes(b)
        } else {
            i16::from_le_bytes(b)
        }
    }

    fn f32(&self, off: usize) -> f32 {
        let b: [u8; 4] = self.bytes[off..off + 4].try_into().unwrap();
        if self.big_endian {
            f32::from_be_bytes(b)
        } else {
            f32::from_le_bytes(b)
        }
    }
}

fn maybe_gunzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>, ParseError> {
    if bytes.starts_with(&[0x1F, 0x8B]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| ParseError::Gzip(e.to_string()))?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header, ParseError> {
    if bytes.len() < NIFTI_HEADER_SIZE {
        return Err(ParseError::Truncated("NIfTI header shorter than 348 bytes"));
    }
    let le = i32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let be = i32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let big_endian = match (le, be) {
        (348, _) => false,
        (_, 348) => true,
        _ => return Err(ParseError::BadMagic(format!("sizeof_hdr={le}"))),
    };
    let magic = &bytes[344..348];
    if magic != b"n+1\0" && magic != b"ni1\0" {
        return Err(ParseError::BadMagic(String::from_utf8_lossy(magic).into_owned()));
    }
    let f = Fields { bytes, big_endian };

    let rank = f.i16(40);
    let raw_dims: Vec<i64> = (0..8).map(|i| f.i16(40 + 2 * i) as i64).collect();
    if !(1..=7).contains(&rank) {
        return Err(ParseError::InvalidDims(raw_dims));
    }
    let mut dims = [1usize; 3];
    for axis in 0..3 {
        if (axis as i16) < rank {
            let d = raw_dims[axis + 1];
            if d < 1 {
                return Err(ParseError::InvalidDims(raw_dims));
            }
            dims[axis] = d as usize;
        }
    }
    // Only scalar 3D grids; trailing dimensions must be singleton.
    for axis in 4..=rank as usize {
        if raw_dims[axis] != 1 {
            return Err(ParseError::InvalidDims(raw_dims));
        }
    }

    let code = f.i16(70);
    let bitpix = f.i16(72);
    let datatype = NiftiDatatype::from_code(code)
        .filter(|d| d.bitpix() == bitpix)
        .ok_or(ParseError::UnsupportedDatatype { code, bitpix })?;

    let mut spacing = [1.0f64; 3];
    for (axis, slot) in spacing.iter_mut().enumerate() {
        let value = f.f32(76 + 4 * (axis + 1)) as f64;
        if (axis as i16) < rank || value != 0.0 {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParseError::NonPositiveSpacing { axis, value });
            }
            *slot = value;
        }
    }

    let vox_offset = f.f32(108);
    if !(vox_offset.is_finite() && vox_offset >= 0.0) {
        return Err(ParseError::LengthMismatch {
            expected: NIFTI_HEADER_SIZE,
            actual: bytes.len(),
        });
    }
    let vox_offset = vox_offset as usize;

    let mut slope = f.f32(112) as f64;
    let mut intercept = f.f32(116) as f64;
    if slope == 0.0 || !slope.is_finite() {
        slope = 1.0;
    }
    if !intercept.is_finite() {
        intercept = 0.0;
    }

    Ok(Header {
        big_endian,
        dims,
        spacing,
        datatype,
        vox_offset,
        slope,
        intercept,
    })
}

fn decode_values(header: &Header, data: &[u8]) -> Result<Vec<f64>, ParseError> {
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    let width = header.datatype.byte_size();
    let expected = n * width;
    if data.len() != expected {
        return Err(ParseError::LengthMismatch {
            expected,
            actual: data.len(),
        });
    }
    let be = header.big_endian;
    let values = data.chunks_exact(width).map(|c| match header.datatype {
        NiftiDatatype::Uint8 => c[0] as f64,
        NiftiDatatype::Int16 => {
            let b = [c[0], c[1]];
            (if be { i16::from_be_bytes(b) } else { i16::from_le_bytes(b) }) as f64
        }
        NiftiDatatype::Int32 => {
            let b = c.try_into().unwrap();
            (if be { i32::from_be_bytes(b) } else { i32::from_le_bytes(b) }) as f64
        }
        NiftiDatatype::Float32 => {
            let b = c.try_into().unwrap();
            (if be { f32::from_be_bytes(b) } else { f32::from_le_bytes(b) }) as f64
        }
        NiftiDatatype::Float64 => {
            let b = c.try_into().unwrap();
            if be {
                f64::from_be_bytes(b)
            } else {
                f64::from_le_bytes(b)
            }
        }
    });
    let mut out = Vec::with_capacity(n);
    for (i, v) in values.enumerate() {
        let hu = v * header.slope + header.intercept;
        if !hu.is_finite() {
            return Err(ParseError::NonFinite(i));
        }
        out.push(hu);
    }
    Ok(out)
}

fn split_single(bytes: &[u8]) -> Result<(Header, &[u8]), ParseError> {
    let header = parse_header(bytes)?;
    // "ni1" streams handed to the single-stream reader carry their image
    // bytes directly after the header.
    let offset = header.vox_offset.max(NIFTI_HEADER_SIZE);
    if bytes.len() < offset {
        return Err(ParseError::LengthMismatch {
            expected: offset,
            actual: bytes.len(),
        });
    }
    Ok((header, &bytes[offset..]))
}

fn geometry(header: &Header) -> Geometry {
    Geometry {
        dims: header.dims,
        spacing: header.spacing,
    }
}

fn to_volume(header: &Header, data: &[u8], source_id: &str) -> Result<Volume, ParseError> {
    let values = decode_values(header, data)?;
    Ok(Volume {
        geometry: geometry(header),
        data: values.into_iter().map(|v| v as f32).collect(),
        source_id: source_id.to_owned(),
    })
}

fn to_mask(header: &Header, data: &[u8], source_id: &str) -> Result<AnnotationMask, ParseError> {
    let values = decode_values(header, data)?;
    Ok(AnnotationMask {
        geometry: geometry(header),
        data: values.into_iter().map(|v| (v != 0.0) as u8).collect(),
        source_id: source_id.to_owned(),
    })
}

/// Decode a single-stream NIfTI-1 file (plain or gzip) as HU intensities.
pub fn parse_nifti(bytes: &[u8], source_id: &str) -> Result<Volume, ParseError> {
    let bytes = maybe_gunzip(bytes)?;
    let (header, data) = split_single(&bytes)?;
    to_volume(&header, data, source_id)
}

/// Decode a single-stream NIfTI-1 file as a binary mask (nonzero → 1).
pub fn parse_nifti_mask(bytes: &[u8], source_id: &str) -> Result<AnnotationMask, ParseError> {
    let bytes = maybe_gunzip(bytes)?;
    let (header, data) = split_single(&bytes)?;
    to_mask(&header, data, source_id)
}

/// Decode a `.hdr`/`.img` pair. The image stream starts at `vox_offset`.
pub fn parse_nifti_pair(header: &[u8], image: &[u8], source_id: &str) -> Result<Volume, ParseError> {
    let header_bytes = maybe_gunzip(header)?;
    let image = maybe_gunzip(image)?;
    let header = parse_header(&header_bytes)?;
    if image.len() < header.vox_offset {
        return Err(ParseError::LengthMismatch {
            expected: header.vox_offset,
            actual: image.len(),
        });
    }
    to_volume(&header, &image[header.vox_offset..], source_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Hand-assembled header, independent of the fixture writer in `synth`.
    fn header(dims: [i16; 3], datatype: i16, bitpix: i16, pixdim: [f32; 3], slope: f32, inter: f32) -> Vec<u8> {
        let mut h = vec![0u8; 352];
        h[0..4].copy_from_slice(&348i32.to_le_bytes());
        h[40..42].copy_from_slice(&3i16.to_le_bytes());
        for (i, d) in dims.iter().enumerate() {
            h[42 + 2 * i..44 + 2 * i].copy_from_slice(&d.to_le_bytes());
        }
        h[70..72].copy_from_slice(&datatype.to_le_bytes());
        h[72..74].copy_from_slice(&bitpix.to_le_bytes());
        for (i, p) in pixdim.iter().enumerate() {
            h[80 + 4 * i..84 + 4 * i].copy_from_slice(&p.to_le_bytes());
        }
        h[108..112].copy_from_slice(&352f32.to_le_bytes());
        h[112..116].copy_from_slice(&slope.to_le_bytes());
        h[116..120].copy_from_slice(&inter.to_le_bytes());
        h[344..348].copy_from_slice(b"n+1\0");
        h
    }

    #[test]
    fn int16_rescale_to_hu() {
        let mut bytes = header([4, 4, 2], 4, 16, [0.7, 0.7, 2.5], 1.0, -1024.0);
        for _ in 0..32 {
            bytes.extend_from_slice(&1064i16.to_le_bytes());
        }
        let v = parse_nifti(&bytes, "ct").unwrap();
        assert_eq!(v.dims(), [4, 4, 2]);
        assert!((v.spacing()[2] - 2.5).abs() < 1e-9);
        assert!(v.data().iter().all(|&hu| hu == 40.0));
    }

    #[test]
    fn zero_slope_means_identity() {
        let mut bytes = header([2, 1, 1], 2, 8, [1.0; 3], 0.0, 0.0);
        bytes.extend_from_slice(&[7, 9]);
        let v = parse_nifti(&bytes, "ct").unwrap();
        assert_eq!(v.data(), &[7.0, 9.0]);
    }

    #[test]
    fn all_zero_mask() {
        let mut bytes = header([3, 3, 3], 2, 8, [1.0; 3], 1.0, 0.0);
        bytes.extend(std::iter::repeat_n(0u8, 27));
        let m = parse_nifti_mask(&bytes, "mask").unwrap();
        assert_eq!(m.positive_count(), 0);
    }

    #[test]
    fn mask_binarizes_nonzero() {
        let mut bytes = header([3, 1, 1], 2, 8, [1.0; 3], 1.0, 0.0);
        bytes.extend_from_slice(&[0, 5, 255]);
        let m = parse_nifti_mask(&bytes, "mask").unwrap();
        assert_eq!(m.data(), &[0, 1, 1]);
    }

    #[test]
    fn distinct_errors() {
        let mut bad_magic = header([1, 1, 1], 2, 8, [1.0; 3], 1.0, 0.0);
        bad_magic[344..348].copy_from_slice(b"n+2\0");
        bad_magic.push(0);
        assert!(matches!(parse_nifti(&bad_magic, ""), Err(ParseError::BadMagic(_))));

        let mut bad_type = header([1, 1, 1], 512, 16, [1.0; 3], 1.0, 0.0);
        bad_type.extend_from_slice(&[0, 0]);
        assert!(matches!(
            parse_nifti(&bad_type, ""),
            Err(ParseError::UnsupportedDatatype { code: 512, .. })
        ));

        let short = header([2, 2, 2], 2, 8, [1.0; 3], 1.0, 0.0);
        assert!(matches!(
            parse_nifti(&short, ""),
            Err(ParseError::LengthMismatch { expected: 8, actual: 0 })
        ));

        let mut neg = header([1, 1, 1], 2, 8, [1.0, -1.0, 1.0], 1.0, 0.0);
        neg.push(0);
        assert!(matches!(
            parse_nifti(&neg, ""),
            Err(ParseError::NonPositiveSpacing { axis: 1, .. })
        ));
    }

    #[test]
    fn gzip_stream() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let mut bytes = header([2, 1, 1], 16, 32, [1.0; 3], 1.0, 0.0);
        bytes.extend_from_slice(&(-3.5f32).to_le_bytes());
        bytes.extend_from_slice(&12.25f32.to_le_bytes());
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::fast());
        enc.write_all(&bytes).unwrap();
        let gz = enc.finish().unwrap();
        let v = parse_nifti(&gz, "").unwrap();
        assert_eq!(v.data(), &[-3.5, 12.25]);
    }

    #[test]
    fn big_endian_header() {
        let mut h = vec![0u8; 352];
        h[0..4].copy_from_slice(&348i32.to_be_bytes());
        h[40..42].copy_from_slice(&3i16.to_be_bytes());
        for (i, d) in [2i16, 1, 1].iter().enumerate() {
            h[42 + 2 * i..44 + 2 * i].copy_from_slice(&d.to_be_bytes());
        }
        h[70..72].copy_from_slice(&4i16.to_be_bytes());
        h[72..74].copy_from_slice(&16i16.to_be_bytes());
        for i in 0..3 {
            h[80 + 4 * i..84 + 4 * i].copy_from_slice(&1f32.to_be_bytes());
        }
        h[108..112].copy_from_slice(&352f32.to_be_bytes());
        h[344..348].copy_from_slice(b"n+1\0");
        h.extend_from_slice(&(-1000i16).to_be_bytes());
        h.extend_from_slice(&300i16.to_be_bytes());
        let v = parse_nifti(&h, "").unwrap();
        assert_eq!(v.data(), &[-1000.0, 300.0]);
    }

    #[test]
    fn pair_reader() {
        let mut hdr = header([2, 1, 1], 2, 8, [1.0; 3], 2.0, 1.0);
        hdr.truncate(348);
        hdr[344..348].copy_from_slice(b"ni1\0");
        hdr[108..112].copy_from_slice(&0f32.to_le_bytes());
        let v = parse_nifti_pair(&hdr, &[1, 2], "").unwrap();
        assert_eq!(v.data(), &[3.0, 5.0]);
    }
}
