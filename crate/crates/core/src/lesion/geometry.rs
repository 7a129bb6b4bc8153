use serde::{Deserialize, Serialize};

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl PixelRect {
    pub const fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> i64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i64 {
        self.y1 - self.y0
    }

    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0 || self.y1 <= self.y0
    }

    pub fn clamp_to(&self, width: usize, height: usize) -> PixelRect {
        PixelRect {
            x0: self.x0.clamp(0, width as i64),
            y0: self.y0.clamp(0, height as i64),
            x1: self.x1.clamp(0, width as i64),
            y1: self.y1.clamp(0, height as i64),
        }
    }

    pub fn as_tuple(&self) -> (i64, i64, i64, i64) {
        (self.x0, self.y0, self.x1, self.y1)
    }
}

/// Result of [`expand_bbox`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpandedRect {
    pub clamped: PixelRect,
    pub unclamped: PixelRect,
}

/// Millimetre border to whole pixels, never shrinking the border.
pub fn border_pixels(border_mm: f64, spacing_mm: f64) -> i64 {
    // Guard against 10.000000001 / 1.0 style round-off pushing ceil up by one.
    let px = border_mm / spacing_mm;
    let nearest = px.round();
    if (px - nearest).abs() < 1e-9 {
        nearest as i64
    } else {
        px.ceil() as i64
    }
}

/// Grow `bbox` by `border_mm` on every side, converting per axis with the
/// in-plane spacing, then clamp to the slice bounds.
pub fn expand_bbox(
    bbox: PixelRect,
    border_mm: f64,
    spacing: (f64, f64),
    bounds: (usize, usize),
) -> ExpandedRect {
    let gx = border_pixels(border_mm, spacing.0);
    let gy = border_pixels(border_mm, spacing.1);
    let unclamped = PixelRect::new(bbox.x0 - gx, bbox.y0 - gy, bbox.x1 + gx, bbox.y1 + gy);
    ExpandedRect {
        clamped: unclamped.clamp_to(bounds.0, bounds.1),
        unclamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grows_ten_pixels() {
        let e = expand_bbox(PixelRect::new(10, 10, 20, 20), 10.0, (1.0, 1.0), (512, 512));
        assert_eq!(e.clamped, PixelRect::new(0, 0, 30, 30));
        assert_eq!(e.unclamped, PixelRect::new(0, 0, 30, 30));
    }

    #[test]
    fn zero_border_is_identity() {
        let r = PixelRect::new(3, 4, 9, 12);
        assert_eq!(expand_bbox(r, 0.0, (0.7, 0.7), (512, 512)).clamped, r);
    }

    #[test]
    fn clamps_low_sides() {
        let e = expand_bbox(PixelRect::new(0, 0, 5, 5), 10.0, (2.0, 2.0), (512, 512));
        assert_eq!(e.clamped, PixelRect::new(0, 0, 10, 10));
        assert_eq!(e.unclamped, PixelRect::new(-5, -5, 10, 10));
    }

    #[test]
    fn anisotropic_spacing_uses_ceil() {
        // 10/0.75 = 13.33 -> 14 ; 10/0.8 = 12.5 -> 13
        let e = expand_bbox(PixelRect::new(100, 100, 110, 110), 10.0, (0.75, 0.8), (512, 512));
        assert_eq!(e.clamped, PixelRect::new(86, 87, 124, 123));
    }

    #[test]
    fn clamps_high_sides() {
        let e = expand_bbox(PixelRect::new(60, 60, 64, 64), 10.0, (1.0, 1.0), (64, 64));
        assert_eq!(e.clamped, PixelRect::new(50, 50, 64, 64));
    }
}
