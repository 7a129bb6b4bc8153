use super::{ExtractError, LesionCrop};

/// `{patient_id}_{lesion_id:03}_{slice_index:04}_{r}.png`
pub fn crop_filename(patient_id: &str, lesion_id: u32, slice_index: usize, resolution: usize) -> String {
    format!("{patient_id}_{lesion_id:03}_{slice_index:04}_{resolution}.png")
}

/// 8-bit grayscale PNG bytes of a crop.
pub fn encode_png(crop: &LesionCrop) -> Result<Vec<u8>, ExtractError> {
    let mut out = Vec::new();
    {
        let r = crop.resolution as u32;
        let mut enc = png::Encoder::new(&mut out, r, r);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| ExtractError::Png(e.to_string()))?;
        writer
            .write_image_data(&crop.pixels)
            .map_err(|e| ExtractError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decode an 8-bit grayscale PNG into `(width, height, pixels)`.
pub fn decode_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), ExtractError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| ExtractError::Png(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ExtractError::Png(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(ExtractError::Png(format!(
            "expected 8-bit grayscale, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width, info.height, buf))
}
