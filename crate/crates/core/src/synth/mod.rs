//! Synthetic driver-face sequences and eye-patch datasets: a light face disc
//! on a dark background with two eyes that are either open (bright sclera,
//! dark iris) or closed (a dark horizontal lid line).

mod cascades;
mod patches;

pub use cascades::{eye_cascade, face_cascade};
pub use patches::{eye_patch, eye_patches, PatchSpec};

use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classify::EyeState;
use crate::error::{Error, Result};
use crate::raster::{GrayImage, Point, Rect};
use crate::tracker::EyeSide;

/// Eye layout as fractions of the face size.
pub const EYE_X: [f64; 2] = [0.30, 0.70];
pub const EYE_Y: f64 = 0.38;
const SCLERA_A: f64 = 0.10;
const SCLERA_B: f64 = 0.05;
const IRIS_R: f64 = 0.04;
const LID_B: f64 = 0.015;
/// Ground-truth eye box half extents.
const BOX_A: f64 = 0.13;
const BOX_B: f64 = 0.09;

/// Intensities used by the renderer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Palette {
    pub background: f64,
    pub skin: f64,
    pub sclera: f64,
    pub iris: f64,
    pub lid: f64,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: 50.0,
            skin: 170.0,
            sclera: 210.0,
            iris: 35.0,
            lid: 45.0,
        }
    }
}

/// Inclusive frame range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpan {
    pub start: usize,
    pub end: usize,
}

impl FrameSpan {
    pub fn contains(&self, frame: usize) -> bool {
        (self.start..=self.end).contains(&frame)
    }

    pub fn range(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occlusion {
    pub eye: EyeSide,
    #[serde(flatten)]
    pub span: FrameSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceStart {
    /// Top-left of the face's bounding square at frame 0.
    pub x: f64,
    pub y: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub frames: usize,
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    pub face: FaceStart,
    /// Face translation in pixels per frame.
    pub velocity: [f64; 2],
    /// Frames during which both eyes are closed.
    pub blinks: Vec<FrameSpan>,
    /// Frames during which one eye is not drawn.
    pub occlusions: Vec<Occlusion>,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise: f64,
    pub seed: u64,
    pub palette: Palette,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            frames: 120,
            fps: 30.0,
            width: 320,
            height: 240,
            face: FaceStart {
                x: 110.0,
                y: 60.0,
                size: 100.0,
            },
            velocity: [0.0, 0.0],
            blinks: Vec::new(),
            occlusions: Vec::new(),
            noise: 4.0,
            seed: 0,
            palette: Palette::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EyeTruth {
    pub center: Point,
    pub rect: Rect,
    pub state: EyeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameTruth {
    pub frame: usize,
    pub t: f64,
    pub face: Rect,
    pub left: Option<EyeTruth>,
    pub right: Option<EyeTruth>,
}

/// Geometry of one face instance in continuous image coordinates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FaceModel {
    pub x: f64,
    pub y: f64,
    pub size: f64,
    pub eyes: [Option<EyeState>; 2],
    /// Horizontal iris offset as a fraction of face size.
    pub gaze: f64,
    /// Closed-lid half thickness as a fraction of face size.
    pub lid: f64,
}

impl FaceModel {
    pub(crate) fn eye_center(&self, i: usize) -> Point {
        Point::new(self.x + EYE_X[i] * self.size, self.y + EYE_Y * self.size)
    }

    /// Noise-free intensity at a pixel center.
    pub(crate) fn shade(&self, pal: &Palette, px: f64, py: f64) -> f64 {
        let r = self.size / 2.0;
        let (cx, cy) = (self.x + r, self.y + r);
        if (px - cx).powi(2) + (py - cy).powi(2) > r * r {
            return pal.background;
        }
        for (i, state) in self.eyes.iter().enumerate() {
            let Some(state) = state else { continue };
            let c = self.eye_center(i);
            let (dx, dy) = (px - c.x, py - c.y);
            let a = SCLERA_A * self.size;
            match state {
                EyeState::Open => {
                    let b = SCLERA_B * self.size;
                    if (dx / a).powi(2) + (dy / b).powi(2) <= 1.0 {
                        let ir = IRIS_R * self.size;
                        let gx = dx - self.gaze * self.size;
                        return if gx * gx + dy * dy <= ir * ir { pal.iris } else { pal.sclera };
                    }
                }
                EyeState::Closed => {
                    let b = (self.lid * self.size).max(0.75);
                    if (dx / a).powi(2) + (dy / b).powi(2) <= 1.0 {
                        return pal.lid;
                    }
                }
            }
        }
        pal.skin
    }
}

fn round_rect(x: f64, y: f64, w: f64, h: f64) -> Rect {
    let x0 = x.round().max(0.0);
    let y0 = y.round().max(0.0);
    Rect::new(x0 as usize, y0 as usize, w.round().max(1.0) as usize, h.round().max(1.0) as usize)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Config("synth spec needs at least one frame".into()));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        if self.width < 24 || self.height < 24 {
            return Err(Error::Config("frame must be at least 24x24".into()));
        }
        if !(self.face.size >= 20.0) {
            return Err(Error::Config("face size must be at least 20 px".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!("bad noise level {}", self.noise)));
        }
        for b in &self.blinks {
            if b.start > b.end {
                return Err(Error::Config(format!("blink span {}..{} is reversed", b.start, b.end)));
            }
        }
        Ok(())
    }

    pub(crate) fn face_at(&self, frame: usize) -> FaceModel {
        let k = frame as f64;
        let closed = self.blinks.iter().any(|b| b.contains(frame));
        let state = if closed { EyeState::Closed } else { EyeState::Open };
        let hidden = |side: EyeSide| self.occlusions.iter().any(|o| o.eye == side && o.span.contains(frame));
        FaceModel {
            x: self.face.x + self.velocity[0] * k,
            y: self.face.y + self.velocity[1] * k,
            size: self.face.size,
            eyes: [
                (!hidden(EyeSide::Left)).then_some(state),
                (!hidden(EyeSide::Right)).then_some(state),
            ],
            gaze: 0.0,
            lid: LID_B,
        }
    }

    pub fn truth(&self, frame: usize) -> FrameTruth {
        let f = self.face_at(frame);
        let eye = |i: usize| {
            f.eyes[i].map(|state| {
                let c = f.eye_center(i);
                let s = f.size;
                EyeTruth {
                    center: c,
                    rect: round_rect(c.x - BOX_A * s, c.y - BOX_B * s, 2.0 * BOX_A * s, 2.0 * BOX_B * s),
                    state,
                }
            })
        };
        FrameTruth {
            frame,
            t: frame as f64 / self.fps,
            face: round_rect(f.x, f.y, f.size, f.size),
            left: eye(0),
            right: eye(1),
        }
    }

    /// Renders one frame. Each frame draws its noise from its own stream, so
    /// frames can be produced in any order.
    pub fn render(&self, frame: usize) -> GrayImage {
        let f = self.face_at(frame);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(frame as u64);
        let noise = Normal::new(0.0, self.noise.max(0.0)).expect("validated noise");
        GrayImage::from_fn(self.width, self.height, |x, y| {
            let v = f.shade(&self.palette, x as f64 + 0.5, y as f64 + 0.5);
            let n = if self.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            (v + n).round().clamp(0.0, 255.0) as u8
        })
    }
}
