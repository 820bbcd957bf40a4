use std::sync::OnceLock;

use super::{FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::eyeprep::{EyePatch, PATCH_H, PATCH_W};
use crate::raster::FloatImage;

pub const UNIFORM_BINS: usize = 58;
const GRID_X: usize = 3;
const GRID_Y: usize = 2;
const CELL_W: usize = PATCH_W / GRID_X;
const CELL_H: usize = PATCH_H / GRID_Y;
pub const LBP_DIM: usize = GRID_X * GRID_Y * UNIFORM_BINS;

fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_left(1)).count_ones()
}

/// Maps each 8-bit code to its uniform-pattern bin (ascending code order),
/// or `None` for the 198 non-uniform codes.
pub fn uniform_table() -> &'static [Option<u8>; 256] {
    static TABLE: OnceLock<[Option<u8>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [None; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                t[code as usize] = Some(next);
                next += 1;
            }
        }
        t
    })
}

fn quantize(img: &FloatImage) -> Vec<u8> {
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    img.data()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

pub fn lbp_hist(patch: &EyePatch) -> FeatureVector {
    lbp_image(patch.pixels()).expect("eye patches are always canonical size")
}

/// 3×2 grid of 16×16 cells; each cell histograms the uniform codes of its
/// own interior pixels and is L1-normalized by its uniform count.
pub fn lbp_image(img: &FloatImage) -> Result<FeatureVector> {
    if img.width() != PATCH_W || img.height() != PATCH_H {
        return Err(Error::Dimension(format!(
            "LBP expects a {PATCH_W}x{PATCH_H} patch, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let q = quantize(img);
    let at = |x: usize, y: usize| q[y * PATCH_W + x];
    let table = uniform_table();
    // clockwise from top-left, MSB first
    const NEIGHBORS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];
    let mut out = Vec::with_capacity(LBP_DIM);
    for gy in 0..GRID_Y {
        for gx in 0..GRID_X {
            let mut hist = [0.0f64; UNIFORM_BINS];
            let mut count = 0usize;
            let (x0, y0) = (gx * CELL_W, gy * CELL_H);
            for y in y0 + 1..y0 + CELL_H - 1 {
                for x in x0 + 1..x0 + CELL_W - 1 {
                    let c = at(x, y);
                    let mut code = 0u8;
                    for (bit, (dx, dy)) in NEIGHBORS.iter().enumerate() {
                        let n = at((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                        if n >= c {
                            code |= 0x80 >> bit;
                        }
                    }
                    if let Some(b) = table[code as usize] {
                        hist[b as usize] += 1.0;
                        count += 1;
                    }
                }
            }
            if count > 0 {
                hist.iter_mut().for_each(|v| *v /= count as f64);
            }
            out.extend_from_slice(&hist);
        }
    }
    FeatureVector::new(FeatureKind::Lbp, out)
}
