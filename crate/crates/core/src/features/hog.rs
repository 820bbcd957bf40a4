use super::{FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::eyeprep::{EyePatch, PATCH_H, PATCH_W};
use crate::raster::FloatImage;

pub const HOG_BINS: usize = 9;
const CELL: usize = 8;
const BLOCK_CELLS: usize = 2;
const CELLS_X: usize = PATCH_W / CELL;
const CELLS_Y: usize = PATCH_H / CELL;
const BLOCKS_X: usize = CELLS_X - BLOCK_CELLS + 1;
const BLOCKS_Y: usize = CELLS_Y - BLOCK_CELLS + 1;
pub const HOG_DIM: usize = BLOCKS_X * BLOCKS_Y * BLOCK_CELLS * BLOCK_CELLS * HOG_BINS;
const BIN_WIDTH: f64 = 180.0 / HOG_BINS as f64;
const L2HYS_CLIP: f64 = 0.2;

/// Centered-difference gradient at (x, y) with replicate edges, as
/// (magnitude, unsigned orientation in degrees within [0, 180)).
fn gradient(img: &FloatImage, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = (img.width(), img.height());
    let gx = img.get((x + 1).min(w - 1), y) - img.get(x.saturating_sub(1), y);
    let gy = img.get(x, (y + 1).min(h - 1)) - img.get(x, y.saturating_sub(1));
    let mag = gx.hypot(gy);
    let mut ang = gy.atan2(gx).to_degrees();
    if ang < 0.0 {
        ang += 180.0;
    }
    if ang >= 180.0 {
        ang -= 180.0;
    }
    (mag, ang)
}

/// Splits `mag` between the two nearest bin centers (10°, 30°, …, 170°),
/// wrapping across 0°/180°.
fn vote(hist: &mut [f64], mag: f64, ang: f64) {
    let pos = ang / BIN_WIDTH - 0.5;
    let lo = pos.floor();
    let frac = pos - lo;
    let b0 = (lo as i64).rem_euclid(HOG_BINS as i64) as usize;
    let b1 = (b0 + 1) % HOG_BINS;
    hist[b0] += mag * (1.0 - frac);
    hist[b1] += mag * frac;
}

/// 9-bin orientation histogram over the whole image treated as one cell.
pub fn orientation_histogram(img: &FloatImage) -> [f64; HOG_BINS] {
    let mut hist = [0.0; HOG_BINS];
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (m, a) = gradient(img, x, y);
            vote(&mut hist, m, a);
        }
    }
    hist
}

fn l2_normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

pub fn hog(patch: &EyePatch) -> FeatureVector {
    hog_image(patch.pixels()).expect("eye patches are always canonical size")
}

pub fn hog_image(img: &FloatImage) -> Result<FeatureVector> {
    if img.width() != PATCH_W || img.height() != PATCH_H {
        return Err(Error::Dimension(format!(
            "HOG expects a {PATCH_W}x{PATCH_H} patch, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let mut cells = vec![[0.0f64; HOG_BINS]; CELLS_X * CELLS_Y];
    for y in 0..PATCH_H {
        for x in 0..PATCH_W {
            let (m, a) = gradient(img, x, y);
            vote(&mut cells[(y / CELL) * CELLS_X + x / CELL], m, a);
        }
    }
    let mut out = Vec::with_capacity(HOG_DIM);
    for by in 0..BLOCKS_Y {
        for bx in 0..BLOCKS_X {
            let mut block = Vec::with_capacity(BLOCK_CELLS * BLOCK_CELLS * HOG_BINS);
            for cy in by..by + BLOCK_CELLS {
                for cx in bx..bx + BLOCK_CELLS {
                    block.extend_from_slice(&cells[cy * CELLS_X + cx]);
                }
            }
            // L2-hys
            l2_normalize(&mut block);
            block.iter_mut().for_each(|v| *v = v.min(L2HYS_CLIP));
            l2_normalize(&mut block);
            out.extend(block);
        }
    }
    FeatureVector::new(FeatureKind::Hog, out)
}
