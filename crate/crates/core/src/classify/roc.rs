use super::{EyeState, LabeledSample, SvmModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Samples scoring at or above this are called closed.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", fmt_threshold(p.threshold), p.fpr, p.tpr));
        }
        out
    }
}

fn fmt_threshold(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{t:e}")
    }
}

/// Sweeps thresholds over the distinct scores in descending order, bracketed
/// by +∞ and −∞. Equal scores change class together.
pub fn roc_from_scores(scores: &[f64], labels: &[EyeState]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Evaluation("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l == EyeState::Closed).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation(format!(
            "ROC needs both classes (closed {pos}, open {neg})"
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            match labels[idx[i]] {
                EyeState::Closed => tp += 1,
                EyeState::Open => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    let auc = auc(&points);
    Ok(RocCurve { points, auc })
}

/// Trapezoidal area under (fpr, tpr).
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|p| (p[1].fpr - p[0].fpr) * (p[1].tpr + p[0].tpr) * 0.5)
        .sum()
}

pub fn roc(model: &SvmModel, data: &[LabeledSample]) -> Result<RocCurve> {
    let scores = data
        .iter()
        .map(|s| model.score(&s.features))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<EyeState> = data.iter().map(|s| s.label).collect();
    roc_from_scores(&scores, &labels)
}
