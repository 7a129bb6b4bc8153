/// Map a Hounsfield value through a display window to an 8-bit gray level.
///
/// `g = round(255 * clamp((hu - (center - width/2)) / width, 0, 1))`, rounding
/// half away from zero. `width` must be positive.
#[inline]
pub fn window_hu(hu: f64, center: f64, width: f64) -> u8 {
    debug_assert!(width > 0.0);
    let lower = center - width / 2.0;
    // Scale before dividing: for integer HU the quotient is then correctly
    // rounded, so exact halves stay exact.
    let g = (255.0 * (hu - lower) / width).clamp(0.0, 255.0);
    g.round() as u8
}

/// Window a whole slice of HU values.
pub fn window_slice(hu: &[f32], center: f64, width: f64) -> Vec<u8> {
    hu.iter().map(|&v| window_hu(v as f64, center, width)).collect()
}
