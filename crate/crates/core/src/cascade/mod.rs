//! Boosted cascade detectors (Haar and multi-block LBP) evaluated over
//! integral images, multi-scale scanning, detection grouping and the
//! face-geometry eye search regions.

mod detect;
mod load;
mod write;
pub mod xml;

pub use detect::{
    detect_multiscale, detect_multiscale_in, eye_rois, group_detections, group_scored,
    DetectParams, Detection, EyeRoiConfig, EyeRois,
};
pub use load::load_cascade;
pub use write::write_cascade;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{IntegralImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CascadeKind {
    Haar,
    Lbp,
}

/// One weighted rectangle of a Haar feature, in base-window coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRect {
    pub rect: Rect,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
}

/// Multi-block LBP feature: `block` is the top-left cell of a 3×3 grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbpFeature {
    pub block: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    Haar(HaarFeature),
    Lbp(LbpFeature),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    /// Haar: take the left branch when the normalized feature value is below.
    Threshold(f64),
    /// LBP: take the left branch when the 8-bit code is a member (256-bit mask).
    Subset([u32; 8]),
}

impl Split {
    pub fn subset_contains(mask: &[u32; 8], code: u8) -> bool {
        mask[(code >> 5) as usize] & (1u32 << (code & 31)) != 0
    }
}

/// Decision-tree node. Child indices `> 0` point at another node; `≤ 0` at
/// leaf `-index`. Stumps are a single node with children `0` and `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub feature: Feature,
    pub split: Split,
    pub left: i32,
    pub right: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub nodes: Vec<TreeNode>,
    pub leaves: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub weak: Vec<WeakClassifier>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    pub base_w: usize,
    pub base_h: usize,
    pub kind: CascadeKind,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowVerdict {
    pub accepted: bool,
    /// Index of the first stage whose sum fell below its threshold.
    pub rejected_at: Option<usize>,
    /// Stage sum of the last stage evaluated.
    pub score: f64,
}

impl Cascade {
    pub fn base_rect(&self) -> Rect {
        Rect::new(0, 0, self.base_w, self.base_h)
    }

    /// Keeps only the first `n` stages.
    pub fn truncated(&self, n: usize) -> Cascade {
        Cascade {
            stages: self.stages[..n.min(self.stages.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Evaluates one window. The window's size must be the base window scaled
    /// by a common factor (±1 px rounding on the height).
    pub fn eval_window(&self, ii: &IntegralImage, window: Rect) -> Result<WindowVerdict> {
        window.check(ii.width(), ii.height())?;
        let scale = window.w as f64 / self.base_w as f64;
        let expect_h = self.base_h as f64 * scale;
        if window.w < self.base_w || (window.h as f64 - expect_h).abs() > 1.0 {
            return Err(Error::Dimension(format!(
                "window {window} is not a scaled {}x{} base window",
                self.base_w, self.base_h
            )));
        }
        let scaled = ScaledCascade::new(self, scale, window.w, window.h);
        Ok(scaled.eval(ii, window.x, window.y))
    }
}

/// Feature geometry resolved at one scale, relative to the window origin.
pub(crate) struct ScaledCascade<'a> {
    cascade: &'a Cascade,
    pub(crate) win_w: usize,
    pub(crate) win_h: usize,
    norm: Rect,
    features: Vec<Vec<ScaledFeature>>,
}

enum ScaledFeature {
    Haar(Vec<(Rect, f64)>),
    Lbp { bw: usize, bh: usize, x: usize, y: usize },
}

fn scale_len(v: usize, s: f64) -> usize {
    (v as f64 * s).round() as usize
}

fn scale_rect(r: Rect, s: f64, win_w: usize, win_h: usize) -> Rect {
    let x = scale_len(r.x, s).min(win_w - 1);
    let y = scale_len(r.y, s).min(win_h - 1);
    let w = scale_len(r.w, s).clamp(1, win_w - x);
    let h = scale_len(r.h, s).clamp(1, win_h - y);
    Rect::new(x, y, w, h)
}

impl<'a> ScaledCascade<'a> {
    pub(crate) fn new(cascade: &'a Cascade, scale: f64, win_w: usize, win_h: usize) -> Self {
        // variance normalization region: the window inset by one base pixel
        let inset = scale_len(1, scale);
        let norm = if win_w > 2 * inset && win_h > 2 * inset {
            Rect::new(inset, inset, win_w - 2 * inset, win_h - 2 * inset)
        } else {
            Rect::new(0, 0, win_w, win_h)
        };
        let features = cascade
            .stages
            .iter()
            .flat_map(|st| st.weak.iter())
            .map(|wc| {
                wc.nodes
                    .iter()
                    .map(|n| match &n.feature {
                        Feature::Haar(f) => ScaledFeature::Haar(scale_haar(f, scale, win_w, win_h)),
                        Feature::Lbp(f) => {
                            // rounding must not push the 3x3 grid past the window
                            let bw = scale_len(f.block.w, scale).clamp(1, (win_w / 3).max(1));
                            let bh = scale_len(f.block.h, scale).clamp(1, (win_h / 3).max(1));
                            let x = scale_len(f.block.x, scale).min(win_w.saturating_sub(3 * bw));
                            let y = scale_len(f.block.y, scale).min(win_h.saturating_sub(3 * bh));
                            ScaledFeature::Lbp { bw, bh, x, y }
                        }
                    })
                    .collect()
            })
            .collect();
        ScaledCascade {
            cascade,
            win_w,
            win_h,
            norm,
            features,
        }
    }

    /// Window at (`x`, `y`) must lie inside the integral image.
    pub(crate) fn eval(&self, ii: &IntegralImage, x: usize, y: usize) -> WindowVerdict {
        debug_assert!(x + self.win_w <= ii.width() && y + self.win_h <= ii.height());
        let inv_area = 1.0 / self.norm.area() as f64;
        let sigma = if self.cascade.kind == CascadeKind::Haar {
            let nr = Rect::new(x + self.norm.x, y + self.norm.y, self.norm.w, self.norm.h);
            let mean = ii.sum_unchecked(nr) as f64 * inv_area;
            let var = ii.sq_sum_unchecked(nr) as f64 * inv_area - mean * mean;
            var.max(0.0).sqrt().max(1.0)
        } else {
            1.0
        };
        let norm_factor = inv_area / sigma;

        let mut weak_idx = 0;
        let mut score = 0.0;
        for (si, stage) in self.cascade.stages.iter().enumerate() {
            let mut sum = 0.0;
            for wc in &stage.weak {
                let feats = &self.features[weak_idx];
                weak_idx += 1;
                let mut idx = 0i32;
                let leaf = loop {
                    let node = &wc.nodes[idx as usize];
                    let go_left = match (&feats[idx as usize], &node.split) {
                        (ScaledFeature::Haar(rects), Split::Threshold(t)) => {
                            let mut v = 0.0;
                            for (r, w) in rects {
                                let rr = Rect::new(x + r.x, y + r.y, r.w, r.h);
                                v += w * ii.sum_unchecked(rr) as f64;
                            }
                            v * norm_factor < *t
                        }
                        (ScaledFeature::Lbp { bw, bh, x: fx, y: fy }, Split::Subset(mask)) => {
                            let code = mb_lbp_code(ii, x + fx, y + fy, *bw, *bh);
                            Split::subset_contains(mask, code)
                        }
                        _ => unreachable!("feature/split kinds validated at load"),
                    };
                    idx = if go_left { node.left } else { node.right };
                    if idx <= 0 {
                        break wc.leaves[(-idx) as usize];
                    }
                };
                sum += leaf;
            }
            score = sum;
            if sum < stage.threshold {
                return WindowVerdict {
                    accepted: false,
                    rejected_at: Some(si),
                    score,
                };
            }
        }
        WindowVerdict {
            accepted: true,
            rejected_at: None,
            score,
        }
    }
}

fn scale_haar(f: &HaarFeature, s: f64, win_w: usize, win_h: usize) -> Vec<(Rect, f64)> {
    let mut out: Vec<(Rect, f64)> = f
        .rects
        .iter()
        .map(|wr| (scale_rect(wr.rect, s, win_w, win_h), wr.weight))
        .collect();
    // Re-balance the first weight so features that cancel on a constant
    // patch in base geometry still cancel after integer rounding.
    let base: f64 = f.rects.iter().map(|wr| wr.weight * wr.rect.area() as f64).sum();
    if base.abs() < 1e-9 && out.len() > 1 {
        let rest: f64 = out[1..].iter().map(|(r, w)| w * r.area() as f64).sum();
        out[0].1 = -rest / out[0].0.area() as f64;
    }
    out
}

/// 8-bit multi-block LBP code: neighbor block sum ≥ center block sum sets the
/// bit; bits run clockwise from the top-left block, which is the MSB.
pub(crate) fn mb_lbp_code(ii: &IntegralImage, x: usize, y: usize, bw: usize, bh: usize) -> u8 {
    let block = |i: usize, j: usize| ii.sum_unchecked(Rect::new(x + i * bw, y + j * bh, bw, bh));
    let c = block(1, 1);
    const ORDER: [(usize, usize); 8] = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
    let mut code = 0u8;
    for (bit, &(i, j)) in ORDER.iter().enumerate() {
        if block(i, j) >= c {
            code |= 0x80 >> bit;
        }
    }
    code
}
