//! Eye tracking by dynamic template matching.
//!
//! Each eye keeps a FIFO pool of appearance templates captured only from
//! detector-confirmed eyes. In tracked frames every template is correlated
//! against a search region around the Kalman prediction; the per-template
//! best locations are averaged and the mean best score decides whether the
//! eye is still held. Pair geometry is checked when both eyes are found.

mod kalman;
mod ncc;

pub use kalman::KalmanTrack;
pub use ncc::{ncc_match, MatchResult, Plane};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EyeSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    patch: GrayImage,
    pub captured_at: u64,
}

impl Template {
    pub fn new(patch: GrayImage, captured_at: u64) -> Result<Self> {
        let first = patch.data()[0];
        if patch.data().iter().all(|&v| v == first) {
            return Err(Error::DegenerateTemplate);
        }
        Ok(Template { patch, captured_at })
    }

    pub fn patch(&self) -> &GrayImage {
        &self.patch
    }

    pub fn w(&self) -> usize {
        self.patch.width()
    }

    pub fn h(&self) -> usize {
        self.patch.height()
    }
}

pub const MIN_POOL_CAPACITY: usize = 10;
pub const MAX_POOL_CAPACITY: usize = 20;

#[derive(Debug, Clone)]
pub struct TemplatePool {
    pub side: EyeSide,
    templates: VecDeque<Template>,
    capacity: usize,
}

impl TemplatePool {
    pub fn new(side: EyeSide, capacity: usize) -> Result<Self> {
        if !(MIN_POOL_CAPACITY..=MAX_POOL_CAPACITY).contains(&capacity) {
            return Err(Error::Config(format!(
                "template pool capacity {capacity} outside [{MIN_POOL_CAPACITY}, {MAX_POOL_CAPACITY}]"
            )));
        }
        Ok(TemplatePool {
            side,
            templates: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Oldest first.
    pub fn templates(&self) -> impl Iterator<Item = &Template> {
        self.templates.iter()
    }

    /// Appends a detector-confirmed patch, evicting the oldest when full.
    /// Constant patches are rejected and leave the pool unchanged.
    pub fn update(&mut self, patch: GrayImage, frame: u64) -> Result<()> {
        let t = Template::new(patch, frame)?;
        if self.templates.len() == self.capacity {
            self.templates.pop_front();
        }
        self.templates.push_back(t);
        Ok(())
    }

    /// Median template width and height (upper median for even counts).
    pub fn median_size(&self) -> Option<(usize, usize)> {
        if self.templates.is_empty() {
            return None;
        }
        let mut ws: Vec<usize> = self.templates.iter().map(Template::w).collect();
        let mut hs: Vec<usize> = self.templates.iter().map(Template::h).collect();
        ws.sort_unstable();
        hs.sort_unstable();
        Some((ws[ws.len() / 2], hs[hs.len() / 2]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub min_distance: f64,
    pub max_distance: f64,
    pub max_dy: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            min_distance: 0.25,
            max_distance: 0.70,
            max_dy: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackConfig {
    /// Search region size as a multiple of the median template size.
    pub roi_margin: f64,
    pub score_threshold: f64,
    pub pool_capacity: usize,
    pub kalman_q: f64,
    pub kalman_r: f64,
    pub pair: PairConfig,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            roi_margin: 2.0,
            score_threshold: 0.5,
            pool_capacity: 16,
            kalman_q: 0.01,
            kalman_r: 1.0,
            pair: PairConfig::default(),
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.roi_margin >= 1.0) {
            return Err(Error::Config(format!("roi_margin {} must be at least 1", self.roi_margin)));
        }
        if !(MIN_POOL_CAPACITY..=MAX_POOL_CAPACITY).contains(&self.pool_capacity) {
            return Err(Error::Config(format!("pool_capacity {} outside [10, 20]", self.pool_capacity)));
        }
        if !(self.kalman_q >= 0.0 && self.kalman_r > 0.0) {
            return Err(Error::Config("kalman_q must be ≥ 0 and kalman_r > 0".into()));
        }
        let p = &self.pair;
        if !(0.0 < p.min_distance && p.min_distance < p.max_distance && p.max_dy >= 0.0) {
            return Err(Error::Config("pair bounds must satisfy 0 < min_distance < max_distance".into()));
        }
        Ok(())
    }
}

/// Nearest pixel, halves rounding toward −∞.
fn round_half_down(v: f64) -> f64 {
    (v - 0.5).ceil()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedEye {
    /// Template-averaged center, rounded to a pixel.
    pub center: Point,
    /// Mean of the per-template best scores.
    pub score: f64,
    /// Search region actually used.
    pub roi: Rect,
}

/// Matches every pool template around `predicted`; `None` means lost.
pub fn track_eye(img: &GrayImage, pool: &TemplatePool, predicted: Point, cfg: &TrackConfig) -> Option<TrackedEye> {
    let (mw, mh) = pool.median_size()?;
    let roi = Rect::centered_clipped(
        predicted,
        cfg.roi_margin * mw as f64,
        cfg.roi_margin * mh as f64,
        img.width(),
        img.height(),
    )?;
    let mut n = 0usize;
    let (mut sx, mut sy, mut ss) = (0.0, 0.0, 0.0);
    for t in pool.templates() {
        if t.w() > roi.w || t.h() > roi.h {
            continue;
        }
        let m = ncc_match(img, roi, t.patch()).ok()?;
        sx += m.center.x;
        sy += m.center.y;
        ss += m.score;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let k = n as f64;
    let score = ss / k;
    if score < cfg.score_threshold {
        return None;
    }
    Some(TrackedEye {
        center: Point::new(round_half_down(sx / k), round_half_down(sy / k)),
        score,
        roi,
    })
}

/// Eye-pair plausibility: image-left eye first, inter-ocular distance within
/// the configured fraction of the face width, limited vertical offset.
pub fn verify_pair(left: Point, right: Point, face_w: f64, cfg: &PairConfig) -> bool {
    if !(face_w > 0.0) || left.x >= right.x {
        return false;
    }
    let d = left.distance(&right);
    d >= cfg.min_distance * face_w && d <= cfg.max_distance * face_w && (left.y - right.y).abs() <= cfg.max_dy * d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Detected,
    Tracked,
    Lost,
}

#[derive(Debug, Clone)]
pub struct EyeTrack {
    pub pool: TemplatePool,
    pub kalman: Option<KalmanTrack>,
    pub last_rect: Option<Rect>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeResult {
    /// Kalman-smoothed center.
    pub center: Point,
    /// Raw center from detection or template matching.
    pub measured: Point,
    pub rect: Rect,
    /// Mean template score for tracked eyes, `None` for detections.
    pub match_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub left: Option<EyeResult>,
    pub right: Option<EyeResult>,
}

#[derive(Debug, Clone)]
pub struct TrackState {
    pub left: EyeTrack,
    pub right: EyeTrack,
    /// Width of the most recently detected face.
    pub face_w: f64,
    pub status: TrackStatus,
    cfg: TrackConfig,
}

impl TrackState {
    pub fn new(cfg: TrackConfig) -> Result<Self> {
        cfg.validate()?;
        let eye = |side| -> Result<EyeTrack> {
            Ok(EyeTrack {
                pool: TemplatePool::new(side, cfg.pool_capacity)?,
                kalman: None,
                last_rect: None,
            })
        };
        Ok(TrackState {
            left: eye(EyeSide::Left)?,
            right: eye(EyeSide::Right)?,
            face_w: 0.0,
            status: TrackStatus::Lost,
            cfg,
        })
    }

    pub fn config(&self) -> &TrackConfig {
        &self.cfg
    }

    pub fn eye(&self, side: EyeSide) -> &EyeTrack {
        match side {
            EyeSide::Left => &self.left,
            EyeSide::Right => &self.right,
        }
    }

    pub fn mark_lost(&mut self) {
        self.status = TrackStatus::Lost;
    }

    /// Seeds the state from detector output: captures templates from the
    /// detected eye rects and feeds their centers to the Kalman filters.
    /// Status becomes `detected` when at least one eye is given.
    pub fn reinitialize(
        &mut self,
        img: &GrayImage,
        face: Rect,
        left: Option<Rect>,
        right: Option<Rect>,
        frame: u64,
    ) -> StepOutcome {
        self.face_w = face.w as f64;
        let cfg = self.cfg;
        let seed = |eye: &mut EyeTrack, rect: Option<Rect>| -> Option<EyeResult> {
            let rect = rect?;
            if let Ok(patch) = img.crop(rect) {
                // constant patches are simply not captured
                let _ = eye.pool.update(patch, frame);
            }
            let c = Point::new((rect.x + rect.w / 2) as f64, (rect.y + rect.h / 2) as f64);
            let smoothed = match eye.kalman.as_mut() {
                Some(k) => k.step(Some(c)),
                None => {
                    eye.kalman = Some(KalmanTrack::new(c, cfg.kalman_q, cfg.kalman_r));
                    c
                }
            };
            eye.last_rect = Some(rect);
            Some(EyeResult {
                center: smoothed,
                measured: c,
                rect,
                match_score: None,
            })
        };
        let out = StepOutcome {
            left: seed(&mut self.left, left),
            right: seed(&mut self.right, right),
        };
        self.status = if out.left.is_some() || out.right.is_some() {
            TrackStatus::Detected
        } else {
            TrackStatus::Lost
        };
        out
    }

    /// One tracked frame: per eye predict, match, update; then pair check.
    pub fn step(&mut self, img: &GrayImage) -> StepOutcome {
        let cfg = self.cfg;
        let run = |eye: &mut EyeTrack| -> Option<EyeResult> {
            let kalman = eye.kalman.as_mut()?;
            if eye.pool.is_empty() {
                return None;
            }
            let prior = kalman.predict();
            let tracked = track_eye(img, &eye.pool, prior, &cfg)?;
            let smoothed = kalman.update(Some(tracked.center));
            let (mw, mh) = eye.pool.median_size()?;
            let rect = Rect::new(
                (tracked.center.x as i64 - (mw / 2) as i64).max(0) as usize,
                (tracked.center.y as i64 - (mh / 2) as i64).max(0) as usize,
                mw,
                mh,
            )
            .clip(img.width(), img.height())?;
            eye.last_rect = Some(rect);
            Some(EyeResult {
                center: smoothed,
                measured: tracked.center,
                rect,
                match_score: Some(tracked.score),
            })
        };
        let mut out = StepOutcome {
            left: run(&mut self.left),
            right: run(&mut self.right),
        };
        self.status = match (&out.left, &out.right) {
            (Some(l), Some(r)) => {
                if verify_pair(l.measured, r.measured, self.face_w, &cfg.pair) {
                    TrackStatus::Tracked
                } else {
                    TrackStatus::Lost
                }
            }
            (None, None) => TrackStatus::Lost,
            _ => TrackStatus::Tracked,
        };
        if self.status == TrackStatus::Lost {
            out = StepOutcome::default();
        }
        out
    }
}

/// Free-function form of [`TrackState::step`].
pub fn step_tracking(state: &mut TrackState, img: &GrayImage) -> StepOutcome {
    state.step(img)
}
