//! Linear SVM eye-state classifier: subgradient training, scoring,
//! ROC evaluation and a line-oriented model file.

mod model_file;
mod roc;
mod train;

pub use model_file::{load_model, parse_model, save_model, write_model};
pub use roc::{auc, roc, roc_from_scores, RocCurve, RocPoint};
pub use train::{hinge_objective, train, train_linear, TrainParams, TrainTrace};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EyeState {
    Open,
    Closed,
}

impl EyeState {
    /// Closed is the positive class.
    pub fn sign(self) -> f64 {
        match self {
            EyeState::Closed => 1.0,
            EyeState::Open => -1.0,
        }
    }

    pub fn flipped(self) -> EyeState {
        match self {
            EyeState::Closed => EyeState::Open,
            EyeState::Open => EyeState::Closed,
        }
    }
}

impl fmt::Display for EyeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EyeState::Open => "open",
            EyeState::Closed => "closed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: EyeState,
}

/// Bare hyperplane over an arbitrary-dimension input.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "model has {} weights, input has {} values",
                self.weights.len(),
                x.len()
            )));
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    pub fn predict(&self, x: &[f64], threshold: f64) -> Result<EyeState> {
        Ok(decide(self.score(x)?, threshold))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn decide(score: f64, threshold: f64) -> EyeState {
    if score >= threshold {
        EyeState::Closed
    } else {
        EyeState::Open
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kind: FeatureKind,
    pub svm: LinearSvm,
    pub trained_on: usize,
    /// Free-form `key=value` pairs carried through the model file.
    pub metadata: Vec<(String, String)>,
}

impl SvmModel {
    pub fn new(kind: FeatureKind, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != kind.dim() {
            return Err(Error::Dimension(format!(
                "{kind} model needs {} weights, got {}",
                kind.dim(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::Domain("non-finite model parameter".into()));
        }
        Ok(SvmModel {
            kind,
            svm: LinearSvm { weights, bias },
            trained_on: 0,
            metadata: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.svm.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.svm.weights
    }

    pub fn bias(&self) -> f64 {
        self.svm.bias
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        if x.kind() != self.kind {
            return Err(Error::Dimension(format!(
                "{} model cannot score a {} vector ({} vs {} dims)",
                self.kind,
                x.kind(),
                self.dim(),
                x.dim()
            )));
        }
        self.svm.score(x.values())
    }

    pub fn predict(&self, x: &FeatureVector, threshold: f64) -> Result<EyeState> {
        Ok(decide(self.score(x)?, threshold))
    }
}
