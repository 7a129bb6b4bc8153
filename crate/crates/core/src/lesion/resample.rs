use super::geometry::PixelRect;

/// Gray value used for the part of a square crop that falls outside the slice.
pub const PAD_VALUE: u8 = 0;

/// Output of [`square_crop_resample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SquareCrop {
    pub pixels: Vec<u8>,
    pub resolution: usize,
    /// Square source region, possibly reaching outside the slice.
    pub square: PixelRect,
    /// Fraction of the square source region lying outside the slice.
    pub pad_fraction: f64,
}

/// Extend `bbox` symmetrically along its shorter axis to a square, with the
/// extra pixel (odd deficit) going to the high side.
pub fn square_region(bbox: PixelRect) -> PixelRect {
    let (w, h) = (bbox.width(), bbox.height());
    let side = w.max(h);
    let (dx, dy) = (side - w, side - h);
    PixelRect::new(
        bbox.x0 - dx / 2,
        bbox.y0 - dy / 2,
        bbox.x1 + (dx - dx / 2),
        bbox.y1 + (dy - dy / 2),
    )
}

/// Cut a square region around `bbox` out of a windowed slice and resample it
/// to `resolution × resolution` with bilinear interpolation.
///
/// Sample positions use pixel-centre alignment, so a square that is already
/// `resolution` wide is copied unchanged.
pub fn square_crop_resample(
    slice: &[u8],
    width: usize,
    height: usize,
    bbox: PixelRect,
    resolution: usize,
) -> SquareCrop {
    assert!(!bbox.is_empty(), "empty bounding box");
    assert_eq!(slice.len(), width * height, "slice length");
    let square = square_region(bbox);
    let side = square.width() as usize;

    let mut region = vec![PAD_VALUE; side * side];
    let mut outside = 0usize;
    for sy in 0..side {
        let y = square.y0 + sy as i64;
        for sx in 0..side {
            let x = square.x0 + sx as i64;
            if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
                outside += 1;
            } else {
                region[sx + side * sy] = slice[x as usize + width * y as usize];
            }
        }
    }

    let pixels = bilinear_resize(&region, side, resolution);
    SquareCrop {
        pixels,
        resolution,
        square,
        pad_fraction: outside as f64 / (side * side) as f64,
    }
}

fn source_coord(i: usize, src: usize, dst: usize) -> f64 {
    let s = (i as f64 + 0.5) * src as f64 / dst as f64 - 0.5;
    s.clamp(0.0, (src - 1) as f64)
}

/// Bilinear resize of a square `u8` image, rounding half away from zero.
pub fn bilinear_resize(src: &[u8], side: usize, dst: usize) -> Vec<u8> {
    let coords: Vec<(usize, usize, f64)> = (0..dst)
        .map(|i| {
            let s = source_coord(i, side, dst);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(side - 1);
            (lo, hi, s - lo as f64)
        })
        .collect();
    let mut out = Vec::with_capacity(dst * dst);
    for &(y0, y1, fy) in &coords {
        for &(x0, x1, fx) in &coords {
            let p = |x: usize, y: usize| src[x + side * y] as f64;
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}
