//! Deterministic linear trainer shared by the active learner and the defect
//! predictors.
//!
//! Minimizes `λ/2·‖(w, b)‖² + Σ_i c_i·loss(y_i (w·x_i + b)) / Σ_i c_i` with
//! full-batch subgradient steps of size `1/(λ·t)` (the Pegasos schedule with
//! the whole training set as the batch). The bias is folded into the
//! regularized weight vector. No shuffling is involved, so training is a pure
//! function of its inputs: flipping every label negates the model exactly,
//! and two mirror-image points leave the bias at zero.

use serde::{Deserialize, Serialize};

use crate::corpus::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub l2_lambda: f64,
    pub epochs: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { l2_lambda: 0.01, epochs: 20 }
    }
}

impl LinearConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.l2_lambda > 0.0 && self.l2_lambda.is_finite()) {
            return Err(format!("l2_lambda must be > 0 (got {})", self.l2_lambda));
        }
        if self.epochs == 0 {
            return Err("epochs must be >= 1".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_pairs(&self, x: &[(u32, f64)]) -> f64 {
        x.iter()
            .map(|&(d, v)| self.weights.get(d as usize).copied().unwrap_or(0.0) * v)
            .sum::<f64>()
            + self.bias
    }

    /// Signed distance proxy `w·x + b`; an empty vector scores `b`.
    pub fn decision(&self, x: &SparseVector) -> f64 {
        self.decision_pairs(x.entries())
    }

    pub fn decision_dense(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Logistic link `1 / (1 + e^{-t})` of the decision value.
    pub fn probability(&self, x: &SparseVector) -> f64 {
        sigmoid(self.decision(x))
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub x: &'a [(u32, f64)],
    pub positive: bool,
    /// Per-example loss weight.
    pub weight: f64,
}

impl<'a> Example<'a> {
    pub fn new(x: &'a [(u32, f64)], positive: bool) -> Self {
        Self { x, positive, weight: 1.0 }
    }
}

/// Class weights proportional to `1/|positives|` and `1/|negatives|`, scaled
/// so that the mean per-example weight is 1.
pub fn balanced_weights(n_pos: usize, n_neg: usize) -> (f64, f64) {
    let n = (n_pos + n_neg) as f64;
    let w = |k: usize| if k == 0 { 0.0 } else { n / (2.0 * k as f64) };
    (w(n_pos), w(n_neg))
}

pub fn train(dim: usize, examples: &[Example<'_>], loss: Loss, config: &LinearConfig) -> LinearModel {
    let mut model = LinearModel::zeros(dim);
    let total_weight: f64 = examples.iter().map(|e| e.weight).sum();
    if examples.is_empty() || total_weight <= 0.0 {
        return model;
    }
    let mut grad = vec![0.0; dim];
    for t in 1..=config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_bias = 0.0;
        for e in examples {
            let y = if e.positive { 1.0 } else { -1.0 };
            let margin = y * model.decision_pairs(e.x);
            let g = match loss {
                Loss::Hinge if margin < 1.0 => -y,
                Loss::Hinge => 0.0,
                Loss::Logistic => -y * sigmoid(-margin),
            };
            if g == 0.0 {
                continue;
            }
            let g = g * e.weight;
            for &(d, v) in e.x {
                if let Some(slot) = grad.get_mut(d as usize) {
                    *slot += g * v;
                }
            }
            grad_bias += g;
        }
        let eta = 1.0 / (config.l2_lambda * t as f64);
        let shrink = 1.0 - 1.0 / t as f64;
        let step = eta / total_weight;
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w = shrink * *w - step * g;
        }
        model.bias = shrink * model.bias - step * grad_bias;
    }
    model
}
