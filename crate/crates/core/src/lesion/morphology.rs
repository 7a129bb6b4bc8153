/// A 2D binary grid, x-fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySlice {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinarySlice {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "slice data length");
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[x + self.width * y]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[x + self.width * y] = v;
    }

    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Half-open bounding box `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bbox = Some(match bbox {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        bbox
    }

    /// `a ⊆ b`
    pub fn is_subset_of(&self, other: &BinarySlice) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

// 3x3 min/max filters done separably: a 1x3 pass then a 3x1 pass.
fn filter3(src: &BinarySlice, erode: bool) -> BinarySlice {
    let (w, h) = (src.width, src.height);
    // Out-of-bounds reads as background in both passes: for erosion that
    // removes border pixels, for dilation it contributes nothing.
    let combine = |a: bool, b: bool| if erode { a && b } else { a || b };
    let at = |s: &[bool], x: i64, y: i64| -> bool {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            false
        } else {
            s[x as usize + w * y as usize]
        }
    };
    let mut horiz = vec![false; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let v = combine(combine(at(&src.data, x - 1, y), at(&src.data, x, y)), at(&src.data, x + 1, y));
            horiz[x as usize + w * y as usize] = v;
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            out[x as usize + w * y as usize] =
                combine(combine(at(&horiz, x, y - 1), at(&horiz, x, y)), at(&horiz, x, y + 1));
        }
    }
    BinarySlice::from_vec(w, h, out)
}

/// Erosion with a 3x3 square; pixels outside the grid count as background.
pub fn erode(src: &BinarySlice) -> BinarySlice {
    filter3(src, true)
}

/// Dilation with a 3x3 square; pixels outside the grid are ignored.
pub fn dilate(src: &BinarySlice) -> BinarySlice {
    filter3(src, false)
}

/// Morphological opening: one erosion followed by one dilation.
pub fn open_slice(src: &BinarySlice) -> BinarySlice {
    dilate(&erode(src))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(w: usize, h: usize, x0: usize, y0: usize, side: usize) -> BinarySlice {
        let mut s = BinarySlice::new(w, h);
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                s.set(x, y, true);
            }
        }
        s
    }

    #[test]
    fn isolated_pixel_removed() {
        let mut s = BinarySlice::new(7, 7);
        s.set(3, 3, true);
        assert_eq!(open_slice(&s).area(), 0);
    }

    #[test]
    fn square_preserved() {
        let s = square(9, 9, 2, 2, 5);
        assert_eq!(open_slice(&s), s);
    }

    #[test]
    fn square_touching_border_loses_edge() {
        // Border pixels fail erosion since the outside is background.
        let s = square(5, 5, 0, 0, 5);
        let o = open_slice(&s);
        assert_eq!(o.area(), 25);
        let e = erode(&s);
        assert_eq!(e.area(), 9);
    }

    #[test]
    fn empty_stays_empty() {
        let s = BinarySlice::new(6, 4);
        assert_eq!(open_slice(&s), s);
    }

    #[test]
    fn thin_line_removed() {
        let mut s = BinarySlice::new(10, 5);
        for x in 0..10 {
            s.set(x, 2, true);
            s.set(x, 3, true);
        }
        assert_eq!(open_slice(&s).area(), 0);
    }

    #[test]
    fn bounding_box_half_open() {
        let s = square(9, 9, 2, 3, 4);
        assert_eq!(s.bounding_box(), Some((2, 3, 6, 7)));
        assert_eq!(BinarySlice::new(2, 2).bounding_box(), None);
    }

    fn arb_slice() -> impl Strategy<Value = BinarySlice> {
        (1usize..20, 1usize..20, 0.0f64..1.0).prop_flat_map(|(w, h, p)| {
            proptest::collection::vec(proptest::bool::weighted(p.clamp(0.01, 0.99)), w * h)
                .prop_map(move |d| BinarySlice::from_vec(w, h, d))
        })
    }

    proptest! {
        #[test]
        fn opening_idempotent_and_anti_extensive(s in arb_slice()) {
            let o = open_slice(&s);
            prop_assert!(o.is_subset_of(&s));
            prop_assert_eq!(open_slice(&o), o);
        }
    }
}
