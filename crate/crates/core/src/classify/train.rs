use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, EyeState, LabeledSample, LinearSvm, SvmModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Weight each class's hinge loss by n / (2·n_class).
    pub balance_classes: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            lambda: 1e-4,
            epochs: 50,
            seed: 0,
            balance_classes: false,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Training(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(Error::Training("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objective at the end of each epoch, for the iterate that was kept.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub objective: Vec<f64>,
}

/// λ/2‖w‖² + weighted mean hinge loss.
pub fn hinge_objective(svm: &LinearSvm, xs: &[&[f64]], ys: &[EyeState], lambda: f64) -> f64 {
    let costs = class_costs(ys, false);
    objective(svm, xs, ys, &costs, lambda)
}

fn objective(svm: &LinearSvm, xs: &[&[f64]], ys: &[EyeState], costs: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * dot(&svm.weights, &svm.weights);
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .zip(costs)
        .map(|((x, y), c)| c * (1.0 - y.sign() * (dot(&svm.weights, x) + svm.bias)).max(0.0))
        .sum();
    reg + loss / xs.len() as f64
}

fn class_costs(ys: &[EyeState], balance: bool) -> Vec<f64> {
    let n = ys.len() as f64;
    let pos = ys.iter().filter(|&&y| y == EyeState::Closed).count() as f64;
    ys.iter()
        .map(|&y| match (balance, y) {
            (false, _) => 1.0,
            (true, EyeState::Closed) => n / (2.0 * pos),
            (true, EyeState::Open) => n / (2.0 * (n - pos)),
        })
        .collect()
}

/// Exact minimizer over b of Σ cᵢ·max(0, 1 − yᵢ(sᵢ + b)).
///
/// The loss is convex piecewise linear with kinks at yᵢ − sᵢ; its slope
/// starts at −Σ_pos c and rises by cᵢ at each kink. A flat bottom resolves to
/// its midpoint so that flipping every label negates the result.
fn fit_bias(scores: &[f64], ys: &[EyeState], costs: &[f64]) -> f64 {
    let mut kinks: Vec<(f64, f64)> = scores
        .iter()
        .zip(ys)
        .zip(costs)
        .map(|((s, y), c)| (y.sign() - s, *c))
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pos: f64 = ys
        .iter()
        .zip(costs)
        .filter(|(y, _)| **y == EyeState::Closed)
        .map(|(_, c)| c)
        .sum();
    // slope just right of the current kink is acc − pos
    let mut acc = 0.0;
    let mut i = 0;
    while i < kinks.len() {
        let k = kinks[i].0;
        while i < kinks.len() && kinks[i].0 == k {
            acc += kinks[i].1;
            i += 1;
        }
        if acc > pos {
            return k;
        }
        if acc == pos {
            return match kinks.get(i) {
                Some(next) => 0.5 * (k + next.0),
                None => k,
            };
        }
    }
    kinks.last().map_or(0.0, |k| k.0)
}

/// Trains on raw vectors. Within an epoch, w follows Pegasos updates
/// (η = 1/(λt), projection onto ‖w‖ ≤ 1/√λ) with b held fixed; at each
/// epoch end b is refit exactly and the iterate with the lowest objective
/// seen so far is retained.
pub fn train_linear(xs: &[&[f64]], ys: &[EyeState], params: &TrainParams) -> Result<(LinearSvm, TrainTrace)> {
    params.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!("{} samples but {} labels", xs.len(), ys.len())));
    }
    if !ys.contains(&EyeState::Closed) || !ys.contains(&EyeState::Open) {
        return Err(Error::Training("need at least one sample of each class".into()));
    }
    let dim = xs[0].len();
    if let Some(bad) = xs.iter().find(|x| x.len() != dim) {
        return Err(Error::Dimension(format!("mixed sample dims {dim} and {}", bad.len())));
    }
    if xs.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("non-finite feature value".into()));
    }

    let costs = class_costs(ys, params.balance_classes);
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut t = 0u64;
    let mut best = LinearSvm {
        weights: w.clone(),
        bias: b,
    };
    let mut best_obj = f64::INFINITY;
    let mut trace = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = ys[i].sign();
            let margin = y * (dot(&w, xs[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                let step = eta * costs[i] * y;
                w.iter_mut().zip(xs[i]).for_each(|(v, x)| *v += step * x);
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
        let scores: Vec<f64> = xs.iter().map(|x| dot(&w, x)).collect();
        b = fit_bias(&scores, ys, &costs);
        let cand = LinearSvm {
            weights: w.clone(),
            bias: b,
        };
        let obj = objective(&cand, xs, ys, &costs, lambda);
        if obj < best_obj {
            best_obj = obj;
            best = cand;
        }
        trace.push(best_obj);
    }
    Ok((best, TrainTrace { objective: trace }))
}

pub fn train(data: &[LabeledSample], params: &TrainParams) -> Result<SvmModel> {
    let first = data
        .first()
        .ok_or_else(|| Error::Training("empty training set".into()))?;
    let kind = first.features.kind();
    if let Some(bad) = data.iter().find(|s| s.features.kind() != kind) {
        return Err(Error::Dimension(format!(
            "mixed feature kinds {kind} ({}) and {} ({})",
            kind.dim(),
            bad.features.kind(),
            bad.features.dim()
        )));
    }
    let xs: Vec<&[f64]> = data.iter().map(|s| s.features.values()).collect();
    let ys: Vec<EyeState> = data.iter().map(|s| s.label).collect();
    let (svm, _) = train_linear(&xs, &ys, params)?;
    let mut model = SvmModel::new(kind, svm.weights, svm.bias)?;
    model.trained_on = data.len();
    model.metadata = vec![
        ("lambda".into(), format!("{:e}", params.lambda)),
        ("epochs".into(), params.epochs.to_string()),
        ("seed".into(), params.seed.to_string()),
        ("balance_classes".into(), params.balance_classes.to_string()),
    ];
    Ok(model)
}
