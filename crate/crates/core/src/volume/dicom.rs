//! Minimal reader for uncompressed Explicit VR Little Endian CT slices.

use std::collections::BTreeMap;

use super::{apply_rescale, Geometry, ParseError, RescaleParams, Volume};

pub const TRANSFER_SYNTAX_EXPLICIT_LE: &str = "1.2.840.10008.1.2.1";

const TRANSFER_SYNTAX: (u16, u16) = (0x0002, 0x0010);
const SLICE_THICKNESS: (u16, u16) = (0x0018, 0x0050);
const IMAGE_POSITION: (u16, u16) = (0x0020, 0x0032);
const ROWS: (u16, u16) = (0x0028, 0x0010);
const COLUMNS: (u16, u16) = (0x0028, 0x0011);
const PIXEL_SPACING: (u16, u16) = (0x0028, 0x0030);
const BITS_ALLOCATED: (u16, u16) = (0x0028, 0x0100);
const PIXEL_REPRESENTATION: (u16, u16) = (0x0028, 0x0103);
const RESCALE_INTERCEPT: (u16, u16) = (0x0028, 0x1052);
const RESCALE_SLOPE: (u16, u16) = (0x0028, 0x1053);
const PIXEL_DATA: (u16, u16) = (0x7FE0, 0x0010);

const ITEM: (u16, u16) = (0xFFFE, 0xE000);
const ITEM_END: (u16, u16) = (0xFFFE, 0xE00D);
const SEQUENCE_END: (u16, u16) = (0xFFFE, 0xE0DD);
const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        if self.remaining() < n {
            return Err(ParseError::Truncated("DICOM element runs past end of stream"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, ParseError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ParseError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn tag(&mut self) -> Result<(u16, u16), ParseError> {
        Ok((self.u16()?, self.u16()?))
    }
}

fn long_form(vr: &[u8]) -> bool {
    matches!(
        vr,
        b"OB" | b"OD" | b"OF" | b"OL" | b"OV" | b"OW" | b"SQ" | b"SV" | b"UC" | b"UN" | b"UR" | b"UT" | b"UV"
    )
}

type ElementHeader = ((u16, u16), [u8; 2], u32);

/// Reads one explicit-VR element header, returning (tag, vr, length).
fn element_header(c: &mut Cursor<'_>) -> Result<ElementHeader, ParseError> {
    let tag = c.tag()?;
    if tag.0 == 0xFFFE {
        // Item and delimiter tags carry no VR.
        return Ok((tag, *b"  ", c.u32()?));
    }
    let vr: [u8; 2] = c.take(2)?.try_into().unwrap();
    let len = if long_form(&vr) {
        c.take(2)?;
        c.u32()?
    } else {
        c.u16()? as u32
    };
    Ok((tag, vr, len))
}

/// Skips a sequence body whose header has already been consumed.
fn skip_sequence(c: &mut Cursor<'_>, len: u32) -> Result<(), ParseError> {
    if len != UNDEFINED_LENGTH {
        c.take(len as usize)?;
        return Ok(());
    }
    loop {
        let (tag, _, item_len) = element_header(c)?;
        match tag {
            SEQUENCE_END => return Ok(()),
            ITEM if item_len == UNDEFINED_LENGTH => skip_dataset_until_item_end(c)?,
            ITEM => {
                c.take(item_len as usize)?;
            }
            _ => return Err(ParseError::Truncated("malformed sequence item")),
        }
    }
}

fn skip_dataset_until_item_end(c: &mut Cursor<'_>) -> Result<(), ParseError> {
    loop {
        let (tag, vr, len) = element_header(c)?;
        if tag == ITEM_END {
            return Ok(());
        }
        if &vr == b"SQ" || len == UNDEFINED_LENGTH {
            skip_sequence(c, len)?;
        } else {
            c.take(len as usize)?;
        }
    }
}

/// Top-level elements of interest, keyed by tag.
fn read_elements(bytes: &[u8]) -> Result<BTreeMap<(u16, u16), &[u8]>, ParseError> {
    if bytes.len() < 132 || &bytes[128..132] != b"DICM" {
        return Err(ParseError::NotDicom);
    }
    let mut c = Cursor { bytes, pos: 132 };
    let mut out = BTreeMap::new();
    while c.remaining() > 0 {
        let (tag, vr, len) = element_header(&mut c)?;
        if tag == PIXEL_DATA && len == UNDEFINED_LENGTH {
            return Err(ParseError::UnsupportedPixelFormat(
                "encapsulated pixel data".to_owned(),
            ));
        }
        if &vr == b"SQ" || len == UNDEFINED_LENGTH {
            skip_sequence(&mut c, len)?;
            continue;
        }
        let value = c.take(len as usize)?;
        out.insert(tag, value);
        if tag == TRANSFER_SYNTAX {
            let uid = text(value);
            if uid != TRANSFER_SYNTAX_EXPLICIT_LE {
                return Err(ParseError::UnsupportedTransferSyntax(uid));
            }
        }
    }
    if !out.contains_key(&TRANSFER_SYNTAX) {
        return Err(ParseError::MissingTag(TRANSFER_SYNTAX.0, TRANSFER_SYNTAX.1));
    }
    Ok(out)
}

fn text(value: &[u8]) -> String {
    String::from_utf8_lossy(value)
        .trim_matches(|c: char| c == '\0' || c.is_whitespace())
        .to_owned()
}

fn required<'a>(
    elements: &BTreeMap<(u16, u16), &'a [u8]>,
    tag: (u16, u16),
) -> Result<&'a [u8], ParseError> {
    elements
        .get(&tag)
        .copied()
        .ok_or(ParseError::MissingTag(tag.0, tag.1))
}

fn us(elements: &BTreeMap<(u16, u16), &[u8]>, tag: (u16, u16)) -> Result<u16, ParseError> {
    let v = required(elements, tag)?;
    if v.len() != 2 {
        return Err(ParseError::MalformedValue(tag.0, tag.1, format!("{} bytes", v.len())));
    }
    Ok(u16::from_le_bytes([v[0], v[1]]))
}

fn decimal_strings(value: &[u8], tag: (u16, u16)) -> Result<Vec<f64>, ParseError> {
    text(value)
        .split('\\')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::MalformedValue(tag.0, tag.1, s.to_owned()))
        })
        .collect()
}

fn ds_n(
    elements: &BTreeMap<(u16, u16), &[u8]>,
    tag: (u16, u16),
    n: usize,
) -> Result<Vec<f64>, ParseError> {
    let values = decimal_strings(required(elements, tag)?, tag)?;
    if values.len() != n {
        return Err(ParseError::MalformedValue(
            tag.0,
            tag.1,
            format!("expected {n} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

struct Slice {
    rows: usize,
    columns: usize,
    row_spacing: f64,
    column_spacing: f64,
    z: f64,
    thickness: Option<f64>,
    hu: Vec<f32>,
}

fn parse_slice(bytes: &[u8]) -> Result<Slice, ParseError> {
    let el = read_elements(bytes)?;
    let rows = us(&el, ROWS)? as usize;
    let columns = us(&el, COLUMNS)? as usize;
    let spacing = ds_n(&el, PIXEL_SPACING, 2)?;
    let position = ds_n(&el, IMAGE_POSITION, 3)?;
    let slope = ds_n(&el, RESCALE_SLOPE, 1)?[0];
    let intercept = ds_n(&el, RESCALE_INTERCEPT, 1)?[0];
    let rescale = RescaleParams::new(slope, intercept)?;
    let thickness = match el.get(&SLICE_THICKNESS) {
        Some(v) => decimal_strings(v, SLICE_THICKNESS)?.first().copied(),
        None => None,
    };
    if el.contains_key(&BITS_ALLOCATED) {
        let bits = us(&el, BITS_ALLOCATED)?;
        if bits != 16 {
            return Err(ParseError::UnsupportedPixelFormat(format!(
                "{bits} bits allocated"
            )));
        }
    }
    let signed = match el.get(&PIXEL_REPRESENTATION) {
        Some(_) => us(&el, PIXEL_REPRESENTATION)? == 1,
        None => false,
    };
    if rows == 0 || columns == 0 {
        return Err(ParseError::InvalidDims(vec![columns as i64, rows as i64]));
    }
    for (axis, &s) in [spacing[1], spacing[0]].iter().enumerate() {
        if s <= 0.0 {
            return Err(ParseError::NonPositiveSpacing { axis, value: s });
        }
    }
    let pixels = required(&el, PIXEL_DATA)?;
    let expected = rows * columns * 2;
    if pixels.len() != expected {
        return Err(ParseError::LengthMismatch {
            expected,
            actual: pixels.len(),
        });
    }
    let hu = pixels
        .chunks_exact(2)
        .map(|b| {
            let stored = if signed {
                i16::from_le_bytes([b[0], b[1]]) as i64
            } else {
                u16::from_le_bytes([b[0], b[1]]) as i64
            };
            apply_rescale(stored, rescale) as f32
        })
        .collect();
    Ok(Slice {
        rows,
        columns,
        row_spacing: spacing[0],
        column_spacing: spacing[1],
        z: position[2],
        thickness,
        hu,
    })
}

/// Most frequent gap after bucketing to 1 µm; ties go to the smaller gap.
fn modal_gap(gaps: &[f64]) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for g in gaps {
        *counts.entry((g * 1000.0).round() as i64).or_default() += 1;
    }
    let best = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(k, _)| *k)
        .expect("at least one gap");
    best as f64 / 1000.0
}

/// Assemble one volume from the slices of a series, in any order.
///
/// Slices are sorted by the z component of ImagePositionPatient. The z
/// spacing is the modal gap between neighbours; a single slice falls back to
/// SliceThickness.
pub fn parse_dicom_series<B: AsRef<[u8]>>(
    slices: &[B],
    source_id: &str,
) -> Result<Volume, ParseError> {
    if slices.is_empty() {
        return Err(ParseError::EmptySeries);
    }
    let mut parsed = slices
        .iter()
        .map(|s| parse_slice(s.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &parsed[0];
    let (rows, columns, rs, cs) = (first.rows, first.columns, first.row_spacing, first.column_spacing);
    for s in &parsed[1..] {
        if s.rows != rows || s.columns != columns {
            return Err(ParseError::InconsistentGeometry(format!(
                "slice is {}x{}, series is {}x{}",
                s.columns, s.rows, columns, rows
            )));
        }
        if s.row_spacing != rs || s.column_spacing != cs {
            return Err(ParseError::InconsistentGeometry(format!(
                "pixel spacing {}\\{} differs from {}\\{}",
                s.row_spacing, s.column_spacing, rs, cs
            )));
        }
    }
    parsed.sort_by(|a, b| a.z.total_cmp(&b.z));

    let gaps: Vec<f64> = parsed.windows(2).map(|w| (w[1].z - w[0].z).abs()).collect();
    if let Some(i) = gaps.iter().position(|&g| g < 1e-6) {
        return Err(ParseError::DuplicateSlicePosition(parsed[i].z));
    }
    let sz = if gaps.is_empty() {
        parsed[0]
            .thickness
            .ok_or(ParseError::MissingTag(SLICE_THICKNESS.0, SLICE_THICKNESS.1))?
    } else {
        let mode = modal_gap(&gaps);
        if let Some(g) = gaps.iter().find(|&&g| (g - mode).abs() > 0.1 * mode) {
            log::warn!(
                "event=irregular_slice_gap source={source_id} gap_mm={g} modal_gap_mm={mode}"
            );
        }
        mode
    };
    if sz.is_nan() || sz <= 0.0 {
        return Err(ParseError::NonPositiveSpacing { axis: 2, value: sz });
    }

    let nz = parsed.len();
    let mut data = Vec::with_capacity(rows * columns * nz);
    for s in parsed {
        data.extend_from_slice(&s.hu);
    }
    Ok(Volume {
        geometry: Geometry {
            dims: [columns, rows, nz],
            spacing: [cs, rs, sz],
        },
        data,
        source_id: source_id.to_owned(),
    })
}
