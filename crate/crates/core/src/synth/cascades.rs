//! Hand-built cascades matched to the synthetic renderer: an MB-LBP face
//! detector keyed on the bright disc against a darker surround, and a Haar
//! eye detector keyed on a dark horizontal band between brighter rows.

use crate::cascade::{
    Cascade, CascadeKind, Feature, HaarFeature, LbpFeature, Split, Stage, TreeNode, WeakClassifier,
    WeightedRect,
};
use crate::raster::Rect;

fn stump(feature: Feature, split: Split) -> WeakClassifier {
    WeakClassifier {
        nodes: vec![TreeNode {
            feature,
            split,
            left: 0,
            right: -1,
        }],
        leaves: vec![1.0, -1.0],
    }
}

/// Subset of codes whose `zero_bits` are all clear.
fn codes_without(zero_bits: u8) -> Split {
    let mut mask = [0u32; 8];
    for code in 0..=255u8 {
        if code & zero_bits == 0 {
            mask[(code >> 5) as usize] |= 1 << (code & 31);
        }
    }
    Split::Subset(mask)
}

fn lbp(x: usize, y: usize, bw: usize, bh: usize, zero_bits: u8) -> WeakClassifier {
    stump(
        Feature::Lbp(LbpFeature {
            block: Rect::new(x, y, bw, bh),
        }),
        codes_without(zero_bits),
    )
}

fn one(weak: WeakClassifier) -> Stage {
    Stage {
        weak: vec![weak],
        threshold: 0.0,
    }
}

// neighbor bits, clockwise from top-left
const TL: u8 = 0x80;
const T: u8 = 0x40;
const TR: u8 = 0x20;
const R: u8 = 0x10;
const BR: u8 = 0x08;
const B: u8 = 0x04;
const BL: u8 = 0x02;
const L: u8 = 0x01;

/// 24×24 LBP face cascade: the window's corner blocks must be darker than
/// its center, and in each quadrant the outward blocks darker than the block
/// just inside the disc edge.
pub fn face_cascade() -> Cascade {
    Cascade {
        base_w: 24,
        base_h: 24,
        kind: CascadeKind::Lbp,
        stages: vec![
            one(lbp(0, 0, 8, 8, 0xff)),
            one(lbp(0, 0, 4, 4, TL | T | TR | L | BL)),
            one(lbp(12, 0, 4, 4, TL | T | TR | R | BR)),
            one(lbp(0, 12, 4, 4, TL | L | BL | B | BR)),
            one(lbp(12, 12, 4, 4, TR | R | BR | B | BL)),
        ],
    }
}

fn haar(rects: &[(usize, usize, usize, usize, f64)], threshold: f64) -> WeakClassifier {
    stump(
        Feature::Haar(HaarFeature {
            rects: rects
                .iter()
                .map(|&(x, y, w, h, weight)| WeightedRect {
                    rect: Rect::new(x, y, w, h),
                    weight,
                })
                .collect(),
        }),
        Split::Threshold(threshold),
    )
}

fn either(a: WeakClassifier, b: WeakClassifier) -> Stage {
    Stage {
        weak: vec![a, b],
        threshold: -1.0,
    }
}

/// 24×16 Haar eye cascade centered on the eye. Closed lids and open irises
/// both darken the middle rows against the rows above and below; an open
/// iris also darkens the middle columns against the sclera beside it.
pub fn eye_cascade() -> Cascade {
    let rows = haar(&[(4, 2, 16, 12, -1.0), (4, 6, 16, 4, 3.0)], -0.2);
    let iris = haar(&[(3, 4, 18, 8, -1.0), (9, 4, 6, 8, 3.0)], -0.2);
    Cascade {
        base_w: 24,
        base_h: 16,
        kind: CascadeKind::Haar,
        stages: vec![either(rows, iris)],
    }
}
