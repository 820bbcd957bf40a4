//! Fixed-length eye-patch descriptors: a 540-dim HOG and a 348-dim uniform
//! LBP histogram, both computed on the canonical 48×32 patch.

mod hog;
mod lbp;

pub use hog::{hog, hog_image, orientation_histogram, HOG_BINS, HOG_DIM};
pub use lbp::{lbp_hist, lbp_image, uniform_table, LBP_DIM, UNIFORM_BINS};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eyeprep::EyePatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Hog,
    Lbp,
}

impl FeatureKind {
    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Hog => HOG_DIM,
            FeatureKind::Lbp => LBP_DIM,
        }
    }

    pub fn extract(self, patch: &EyePatch) -> FeatureVector {
        match self {
            FeatureKind::Hog => hog(patch),
            FeatureKind::Lbp => lbp_hist(patch),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Hog => "hog",
            FeatureKind::Lbp => "lbp",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hog" => Ok(FeatureKind::Hog),
            "lbp" => Ok(FeatureKind::Lbp),
            other => Err(Error::Config(format!("unknown feature kind {other:?} (hog|lbp)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    kind: FeatureKind,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(kind: FeatureKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != kind.dim() {
            return Err(Error::Dimension(format!(
                "{kind} vector needs {} values, got {}",
                kind.dim(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite feature value".into()));
        }
        Ok(FeatureVector { kind, values })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
