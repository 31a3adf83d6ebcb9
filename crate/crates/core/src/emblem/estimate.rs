//! Remaining-positives estimate.
//!
//! Unlabelled commits first take the SVM's sign as a provisional label. A
//! logistic regression over the SVM decision value is fit on every commit
//! (labelled ones with their true label, unlabelled ones with the provisional
//! guess); its `p ≥ threshold` calls become the new guesses, and the fit
//! repeats until the guesses stop changing. The expected number of positives
//! is `|L_B|` plus the summed final probabilities of the unlabelled commits.

use serde::{Deserialize, Serialize};

use super::{Session, SessionError};
use crate::linear::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorParams {
    /// Ridge penalty on the slope (summed-loss scale).
    pub l2_lambda: f64,
    /// Newton steps per logistic fit.
    pub newton_steps: usize,
    pub max_iterations: usize,
    pub threshold: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self { l2_lambda: 1.0, newton_steps: 50, max_iterations: 50, threshold: 0.5 }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.l2_lambda > 0.0 && self.l2_lambda.is_finite()) {
            return Err(format!("estimator l2_lambda must be > 0 (got {})", self.l2_lambda));
        }
        if self.newton_steps == 0 {
            return Err("estimator newton_steps must be >= 1".to_string());
        }
        if self.max_iterations == 0 {
            return Err("estimator max_iterations must be >= 1".to_string());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(format!("estimator threshold must be in (0, 1), got {}", self.threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallEstimate {
    pub estimated_total_positives: f64,
    pub estimated_recall: f64,
    /// Number of logistic fits performed.
    pub iterations: usize,
    /// False when `max_iterations` was hit before the guesses settled.
    pub converged: bool,
}

/// True once `found ≥ target · estimated_total`.
pub fn stop_rule(found: usize, estimated_total: f64, target: f64) -> bool {
    found as f64 >= target * estimated_total
}

/// `p(y | s) = σ(slope·s + intercept)` fit by Newton's method, with a ridge
/// penalty on the slope only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Logistic1d {
    pub slope: f64,
    pub intercept: f64,
}

impl Logistic1d {
    pub fn fit(scores: &[f64], labels: &[bool], lambda: f64, steps: usize) -> Self {
        let (mut a, mut b) = (0.0, 0.0);
        for _ in 0..steps {
            let (mut ga, mut gb) = (lambda * a, 0.0);
            let (mut haa, mut hab, mut hbb) = (lambda, 0.0, 1e-9);
            for (&s, &y) in scores.iter().zip(labels) {
                let p = sigmoid(a * s + b);
                let r = p - f64::from(u8::from(y));
                ga += r * s;
                gb += r;
                let w = p * (1.0 - p);
                haa += w * s * s;
                hab += w * s;
                hbb += w;
            }
            let det = haa * hbb - hab * hab;
            if det.is_nan() || det <= 0.0 {
                break;
            }
            let da = (hbb * ga - hab * gb) / det;
            let db = (haa * gb - hab * ga) / det;
            a -= da;
            b -= db;
            if da.abs() < 1e-10 && db.abs() < 1e-10 {
                break;
            }
        }
        Self { slope: a, intercept: b }
    }

    pub fn probability(&self, s: f64) -> f64 {
        sigmoid(self.slope * s + self.intercept)
    }
}

impl Session {
    pub fn estimate_remaining(&self) -> Result<RecallEstimate, SessionError> {
        let model = self.model.as_ref().ok_or(SessionError::NoModel)?;
        if self.positives.is_empty() {
            return Err(SessionError::OneClassEmpty);
        }
        let params = &self.params.estimator;
        let scores: Vec<f64> = self.corpus.vectors().iter().map(|v| model.decision(v)).collect();
        let unlabelled: Vec<usize> = (0..scores.len()).filter(|&i| self.labels[i].is_none()).collect();
        let mut labels: Vec<bool> =
            self.labels.iter().zip(&scores).map(|(l, &s)| l.unwrap_or(s > 0.0)).collect();

        let mut iterations = 0;
        let mut converged = false;
        let probabilities = loop {
            iterations += 1;
            let fit = Logistic1d::fit(&scores, &labels, params.l2_lambda, params.newton_steps);
            let probs: Vec<f64> = unlabelled.iter().map(|&i| fit.probability(scores[i])).collect();
            let mut changed = false;
            for (&i, &p) in unlabelled.iter().zip(&probs) {
                let guess = p >= params.threshold;
                changed |= labels[i] != guess;
                labels[i] = guess;
            }
            if !changed {
                converged = true;
                break probs;
            }
            if iterations >= params.max_iterations {
                break probs;
            }
        };

        let found = self.positives.len() as f64;
        let total = found + probabilities.iter().sum::<f64>();
        Ok(RecallEstimate {
            estimated_total_positives: total,
            estimated_recall: found / total,
            iterations,
            converged,
        })
    }
}
