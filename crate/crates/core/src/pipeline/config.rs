use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::{DetectParams, EyeRoiConfig};
use crate::error::{Error, Result};
use crate::eyeprep::PrepConfig;
use crate::features::FeatureKind;
use crate::tracker::TrackConfig;
use crate::vigilance::VigilanceConfig;

/// Eye search inside each eye region; sizes are fractions of the face width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EyeDetectConfig {
    pub scale_factor: f64,
    pub min_frac: f64,
    pub max_frac: f64,
    pub min_neighbors: usize,
    pub group_eps: f64,
}

impl Default for EyeDetectConfig {
    fn default() -> Self {
        EyeDetectConfig {
            scale_factor: 1.1,
            min_frac: 0.15,
            max_frac: 0.40,
            min_neighbors: 3,
            group_eps: 0.2,
        }
    }
}

impl EyeDetectConfig {
    pub fn params(&self, face_w: usize) -> DetectParams {
        DetectParams {
            scale_factor: self.scale_factor,
            min_size: Some((self.min_frac * face_w as f64).round() as usize),
            max_size: Some((self.max_frac * face_w as f64).round() as usize),
            step: 1,
            min_neighbors: self.min_neighbors,
            group_eps: self.group_eps,
        }
    }
}

fn default_face_detect() -> DetectParams {
    DetectParams {
        min_size: Some(40),
        ..DetectParams::default()
    }
}

/// Runtime configuration. Relative paths resolve against the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub face_cascade: PathBuf,
    pub eye_cascade: PathBuf,
    pub model: PathBuf,
    pub fps: f64,
    #[serde(default = "default_features")]
    pub features: FeatureKind,
    #[serde(default = "default_face_detect")]
    pub face_detect: DetectParams,
    #[serde(default)]
    pub eye_detect: EyeDetectConfig,
    #[serde(default)]
    pub eye_rois: EyeRoiConfig,
    #[serde(default)]
    pub tracker: TrackConfig,
    #[serde(default)]
    pub prep: PrepConfig,
    /// Decision threshold on the SVM score.
    #[serde(default)]
    pub threshold: f64,
    #[serde(default)]
    pub vigilance: VigilanceConfig,
}

fn default_features() -> FeatureKind {
    FeatureKind::Hog
}

impl PipelineConfig {
    /// Config with default parameters around the given artifact paths.
    pub fn new(face_cascade: PathBuf, eye_cascade: PathBuf, model: PathBuf, fps: f64) -> Self {
        PipelineConfig {
            face_cascade,
            eye_cascade,
            model,
            fps,
            features: default_features(),
            face_detect: default_face_detect(),
            eye_detect: EyeDetectConfig::default(),
            eye_rois: EyeRoiConfig::default(),
            tracker: TrackConfig::default(),
            prep: PrepConfig::default(),
            threshold: 0.0,
            vigilance: VigilanceConfig::default(),
        }
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        for p in [&mut cfg.face_cascade, &mut cfg.eye_cascade, &mut cfg.model] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    /// Parameter checks; file existence is checked when artifacts load.
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        let e = &self.eye_detect;
        if !(e.scale_factor > 1.0 && 0.0 < e.min_frac && e.min_frac < e.max_frac) {
            return Err(Error::Config("eye_detect needs scale_factor > 1 and 0 < min_frac < max_frac".into()));
        }
        if !(self.face_detect.scale_factor > 1.0) {
            return Err(Error::Config("face_detect.scale_factor must exceed 1".into()));
        }
        self.tracker.validate()?;
        self.prep.validate()?;
        self.vigilance.validate()
    }

    /// Vigilance settings with the first-frame interval defaulted to 1/fps.
    pub fn vigilance_config(&self) -> VigilanceConfig {
        VigilanceConfig {
            frame_period_hint: self.vigilance.frame_period_hint.or(Some(1.0 / self.fps)),
            ..self.vigilance
        }
    }
}
