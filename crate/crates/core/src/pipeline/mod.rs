//! Frame-by-frame orchestration: detect face and eyes when tracking is lost,
//! otherwise track; classify each located eye; feed the vigilance state
//! machine; emit one report per frame.

mod config;

pub use config::{EyeDetectConfig, PipelineConfig};

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cascade::{detect_multiscale, detect_multiscale_in, eye_rois, load_cascade, Cascade, CascadeKind};
use crate::classify::{load_model, EyeState, SvmModel};
use crate::dataset::pnm_files;
use crate::error::{Error, Result};
use crate::eyeprep::preprocess;
use crate::features::FeatureKind;
use crate::raster::{read_pnm_file, GrayImage, IntegralImage, Point, Rect};
use crate::tracker::{verify_pair, EyeResult, StepOutcome, TrackState, TrackStatus};
use crate::vigilance::{AlarmEvent, FrameEyeObservation, Fused, VigilanceState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EyeReport {
    pub center: Point,
    pub rect: Rect,
    pub match_score: Option<f64>,
    pub state: Option<EyeState>,
    pub svm_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EyesReport {
    pub left: Option<EyeReport>,
    pub right: Option<EyeReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame: usize,
    pub t: f64,
    pub width: usize,
    pub height: usize,
    pub face: Option<Rect>,
    pub eyes: EyesReport,
    pub status: TrackStatus,
    pub fused: Fused,
    pub closed_run: f64,
    pub perclos: f64,
    pub alarm: bool,
    pub alarm_event: AlarmEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageLatency {
    pub detect: f64,
    pub track: f64,
    pub preprocess: f64,
    pub features: f64,
    pub classify: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeIdentity {
    pub source: String,
    pub kind: CascadeKind,
    pub window: [usize; 2],
    pub stages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierIdentity {
    pub source: String,
    pub features: FeatureKind,
    pub dim: usize,
    pub trained_on: usize,
}

/// Which detector and classifier models produced a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelIdentity {
    pub face_cascade: CascadeIdentity,
    pub eye_cascade: CascadeIdentity,
    pub classifier: ClassifierIdentity,
}

/// Final JSONL line. Timing fields vary run to run; everything else is
/// deterministic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub summary: bool,
    pub frames: usize,
    pub detected: usize,
    pub tracked: usize,
    pub lost: usize,
    pub alarms_raised: usize,
    pub alarms_released: usize,
    /// Mean milliseconds per invocation of each stage.
    pub latency_ms: StageLatency,
    pub throughput_fps: f64,
    /// Frames per second over frames that took the tracking path.
    pub tracked_fps: f64,
    pub models: ModelIdentity,
}

#[derive(Debug, Default, Clone, Copy)]
struct Timer {
    total: Duration,
    calls: usize,
}

impl Timer {
    fn add(&mut self, d: Duration) {
        self.total += d;
        self.calls += 1;
    }

    fn mean_ms(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.total.as_secs_f64() * 1e3 / self.calls as f64
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Stats {
    detect: Timer,
    track: Timer,
    preprocess: Timer,
    features: Timer,
    classify: Timer,
    all: Duration,
    tracked_time: Duration,
    detected: usize,
    tracked: usize,
    lost: usize,
    raised: usize,
    released: usize,
}

pub struct Pipeline {
    cfg: PipelineConfig,
    face: Cascade,
    eye: Cascade,
    model: SvmModel,
    track: TrackState,
    vigilance: VigilanceState,
    face_rect: Option<Rect>,
    frame: usize,
    forced_loss: BTreeSet<usize>,
    stats: Stats,
}

fn best(dets: &[crate::cascade::Detection]) -> Option<Rect> {
    dets.iter()
        .max_by(|a, b| {
            (a.neighbors, a.rect.area())
                .cmp(&(b.neighbors, b.rect.area()))
                // earliest in (x, y, w) order wins ties
                .then(std::cmp::Ordering::Greater)
        })
        .map(|d| d.rect)
}

/// Eye crop centered on `c`: the eye box width by two thirds of it.
pub fn eye_crop(img: &GrayImage, c: Point, width: usize) -> Option<GrayImage> {
    let w = width as f64;
    let r = Rect::centered_clipped(c, w, (w * 2.0 / 3.0).round(), img.width(), img.height())?;
    if r.w < 8 || r.h < 8 {
        return None;
    }
    img.crop(r).ok()
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, face: Cascade, eye: Cascade, model: SvmModel) -> Result<Self> {
        cfg.validate()?;
        if face.kind != CascadeKind::Lbp {
            return Err(Error::Config("face cascade must be an LBP cascade".into()));
        }
        if eye.kind != CascadeKind::Haar {
            return Err(Error::Config("eye cascade must be a Haar cascade".into()));
        }
        if model.kind != cfg.features {
            return Err(Error::Config(format!(
                "model is {} ({} dims) but config selects {} ({} dims)",
                model.kind,
                model.dim(),
                cfg.features,
                cfg.features.dim()
            )));
        }
        Ok(Pipeline {
            track: TrackState::new(cfg.tracker)?,
            vigilance: VigilanceState::new(cfg.vigilance_config())?,
            cfg,
            face,
            eye,
            model,
            face_rect: None,
            frame: 0,
            forced_loss: BTreeSet::new(),
            stats: Stats::default(),
        })
    }

    /// Loads cascades and model named by the config.
    pub fn from_config(cfg: PipelineConfig) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let cascade = |p: &Path| -> Result<Cascade> {
            load_cascade(&read(p)?).map_err(|e| match e {
                Error::CascadeLoad { path, message } => Error::CascadeLoad {
                    path: format!("{}: {path}", p.display()),
                    message,
                },
                other => other,
            })
        };
        let face = cascade(&cfg.face_cascade)?;
        let eye = cascade(&cfg.eye_cascade)?;
        let model = load_model(&cfg.model)?;
        Pipeline::new(cfg, face, eye, model)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Forces the tracker into the lost state on frame `k` (testing hook).
    pub fn inject_loss(&mut self, k: usize) {
        self.forced_loss.insert(k);
    }

    fn detect(&mut self, img: &GrayImage) -> (Option<Rect>, StepOutcome) {
        let t0 = Instant::now();
        let ii = IntegralImage::new(img);
        let faces = detect_multiscale(&self.face, img, &self.cfg.face_detect).unwrap_or_default();
        let Some(face) = best(&faces) else {
            self.stats.detect.add(t0.elapsed());
            self.track.mark_lost();
            return (None, StepOutcome::default());
        };
        let mut eyes = [None, None];
        if let Ok(rois) = eye_rois(face, img.width(), img.height(), &self.cfg.eye_rois) {
            let params = self.cfg.eye_detect.params(face.w);
            for (slot, roi) in eyes.iter_mut().zip([rois.left, rois.right]) {
                let found = detect_multiscale_in(&self.eye, &ii, roi, &params).unwrap_or_default();
                *slot = best(&found);
            }
        }
        let center = |r: Rect| Point::new((r.x + r.w / 2) as f64, (r.y + r.h / 2) as f64);
        if let [Some(l), Some(r)] = eyes {
            if !verify_pair(center(l), center(r), face.w as f64, &self.cfg.tracker.pair) {
                self.stats.detect.add(t0.elapsed());
                self.track.mark_lost();
                return (Some(face), StepOutcome::default());
            }
        }
        let outcome = self.track.reinitialize(img, face, eyes[0], eyes[1], self.frame as u64);
        self.stats.detect.add(t0.elapsed());
        (Some(face), outcome)
    }

    fn classify(&mut self, img: &GrayImage, eye: &EyeResult) -> EyeReport {
        let mut report = EyeReport {
            center: eye.center,
            rect: eye.rect,
            match_score: eye.match_score,
            state: None,
            svm_score: None,
        };
        let Some(crop) = eye_crop(img, eye.center, eye.rect.w) else {
            return report;
        };
        let t0 = Instant::now();
        let patch = preprocess(&crop, &self.cfg.prep);
        self.stats.preprocess.add(t0.elapsed());
        let Ok(patch) = patch else { return report };
        let t1 = Instant::now();
        let fv = self.model.kind.extract(&patch);
        self.stats.features.add(t1.elapsed());
        let t2 = Instant::now();
        if let Ok(score) = self.model.score(&fv) {
            report.svm_score = Some(score);
            report.state = Some(if score >= self.cfg.threshold {
                EyeState::Closed
            } else {
                EyeState::Open
            });
        }
        self.stats.classify.add(t2.elapsed());
        report
    }

    pub fn process(&mut self, img: &GrayImage) -> Result<FrameReport> {
        let started = Instant::now();
        let k = self.frame;
        let t = k as f64 / self.cfg.fps;
        let forced = self.forced_loss.contains(&k);
        let was_lost = self.track.status == TrackStatus::Lost;

        let (outcome, path_tracked) = if forced {
            self.track.mark_lost();
            (StepOutcome::default(), false)
        } else if k == 0 || was_lost {
            let (face, out) = self.detect(img);
            self.face_rect = face;
            (out, false)
        } else {
            let t0 = Instant::now();
            let out = self.track.step(img);
            self.stats.track.add(t0.elapsed());
            (out, true)
        };
        let status = self.track.status;
        let face = match status {
            TrackStatus::Lost => None,
            _ => self.face_rect,
        };

        let left = outcome.left.map(|e| self.classify(img, &e));
        let right = outcome.right.map(|e| self.classify(img, &e));
        let verdict = self.vigilance.update(&FrameEyeObservation {
            left: left.and_then(|e| e.state),
            right: right.and_then(|e| e.state),
            timestamp: t,
        })?;

        match status {
            TrackStatus::Detected => self.stats.detected += 1,
            TrackStatus::Tracked => self.stats.tracked += 1,
            TrackStatus::Lost => self.stats.lost += 1,
        }
        match verdict.alarm_event {
            AlarmEvent::Raised => self.stats.raised += 1,
            AlarmEvent::Released => self.stats.released += 1,
            AlarmEvent::None => {}
        }
        let elapsed = started.elapsed();
        self.stats.all += elapsed;
        if path_tracked {
            self.stats.tracked_time += elapsed;
        }
        self.frame += 1;
        Ok(FrameReport {
            frame: k,
            t,
            width: img.width(),
            height: img.height(),
            face,
            eyes: EyesReport { left, right },
            status,
            fused: verdict.fused,
            closed_run: verdict.closed_run,
            perclos: verdict.perclos,
            alarm: verdict.alarm,
            alarm_event: verdict.alarm_event,
        })
    }

    pub fn identity(&self) -> ModelIdentity {
        let cascade = |c: &Cascade, p: &Path| CascadeIdentity {
            source: p.display().to_string(),
            kind: c.kind,
            window: [c.base_w, c.base_h],
            stages: c.stages.len(),
        };
        ModelIdentity {
            face_cascade: cascade(&self.face, &self.cfg.face_cascade),
            eye_cascade: cascade(&self.eye, &self.cfg.eye_cascade),
            classifier: ClassifierIdentity {
                source: self.cfg.model.display().to_string(),
                features: self.model.kind,
                dim: self.model.dim(),
                trained_on: self.model.trained_on,
            },
        }
    }

    pub fn summary(&self) -> Summary {
        let s = &self.stats;
        let fps = |n: usize, d: Duration| {
            if d.is_zero() {
                0.0
            } else {
                n as f64 / d.as_secs_f64()
            }
        };
        Summary {
            summary: true,
            frames: self.frame,
            detected: s.detected,
            tracked: s.tracked,
            lost: s.lost,
            alarms_raised: s.raised,
            alarms_released: s.released,
            latency_ms: StageLatency {
                detect: s.detect.mean_ms(),
                track: s.track.mean_ms(),
                preprocess: s.preprocess.mean_ms(),
                features: s.features.mean_ms(),
                classify: s.classify.mean_ms(),
            },
            throughput_fps: fps(self.frame, s.all),
            tracked_fps: fps(s.tracked, s.tracked_time),
            models: self.identity(),
        }
    }
}

/// Runs every PNM frame in `frames_dir` (sorted by name) and writes one JSON
/// line per frame followed by the summary line.
pub fn run_sequence(pipeline: &mut Pipeline, frames_dir: &Path, out: &mut dyn Write) -> Result<Summary> {
    let files = pnm_files(frames_dir)?;
    if files.is_empty() {
        return Err(Error::Config(format!("no PNM frames in {}", frames_dir.display())));
    }
    let io = |e| Error::io("<output>", e);
    for (index, path) in files.iter().enumerate() {
        let img = read_pnm_file(path).map_err(|e| Error::Frame {
            index,
            message: e.to_string(),
        })?;
        let report = pipeline.process(&img)?;
        let line = serde_json::to_string(&report).expect("reports serialize");
        writeln!(out, "{line}").map_err(io)?;
    }
    let summary = pipeline.summary();
    writeln!(out, "{}", serde_json::to_string(&summary).expect("summary serializes")).map_err(io)?;
    Ok(summary)
}
