use super::{GrayImage, Rect};
use crate::error::Result;

/// Summed-area tables over pixel values and squared pixel values.
///
/// Both tables are `(width + 1) × (height + 1)` with a zero first row and
/// column, so `sums[i][j]` is the sum over rows `< i` and columns `< j`.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u64>,
    sq_sums: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        let mut sq_sums = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            let mut row_sq = 0u64;
            for (x, &p) in img.row(y).iter().enumerate() {
                let p = p as u64;
                row += p;
                row_sq += p * p;
                let at = (y + 1) * stride + x + 1;
                sums[at] = sums[at - stride] + row;
                sq_sums[at] = sq_sums[at - stride] + row_sq;
            }
        }
        IntegralImage {
            width: w,
            height: h,
            sums,
            sq_sums,
        }
    }

    /// Image width (the tables are one wider).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Table entry: sum over rows `< row` and columns `< col`.
    pub fn sum_at(&self, row: usize, col: usize) -> u64 {
        self.sums[row * (self.width + 1) + col]
    }

    pub fn sq_sum_at(&self, row: usize, col: usize) -> u64 {
        self.sq_sums[row * (self.width + 1) + col]
    }

    pub fn rect_sum(&self, r: Rect) -> Result<u64> {
        r.check(self.width, self.height)?;
        Ok(self.sum_unchecked(r))
    }

    pub fn rect_sq_sum(&self, r: Rect) -> Result<u64> {
        r.check(self.width, self.height)?;
        Ok(corners(&self.sq_sums, self.width + 1, r))
    }

    /// Rectangle sum without the bounds check. Callers must have validated `r`.
    #[inline]
    pub(crate) fn sum_unchecked(&self, r: Rect) -> u64 {
        corners(&self.sums, self.width + 1, r)
    }

    #[inline]
    pub(crate) fn sq_sum_unchecked(&self, r: Rect) -> u64 {
        corners(&self.sq_sums, self.width + 1, r)
    }
}

#[inline]
fn corners(table: &[u64], stride: usize, r: Rect) -> u64 {
    let a = table[r.y * stride + r.x];
    let b = table[r.y * stride + r.x + r.w];
    let c = table[(r.y + r.h) * stride + r.x];
    let d = table[(r.y + r.h) * stride + r.x + r.w];
    // a + d ≥ b + c always holds for nonnegative pixels
    d + a - b - c
}
