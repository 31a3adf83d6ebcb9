//! Recall, false alarm, G-score and Popt20.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Denominator of the false alarm rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarMode {
    /// `fp / (fp + tn)`.
    #[default]
    Conventional,
    /// `fp / (tp + tn)`, the formula as printed alongside the G-score.
    PaperLiteral,
}

impl std::str::FromStr for FarMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(FarMode::Conventional),
            "paper_literal" | "paper-literal" => Ok(FarMode::PaperLiteral),
            other => Err(format!("unknown FAR mode {other:?} (expected conventional or paper_literal)")),
        }
    }
}

pub fn confusion(predictions: &[bool], truth: &[bool]) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), truth: truth.len() });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fn_)
}

/// In `PaperLiteral` mode the ratio can exceed 1; it is capped so the
/// G-score stays in `[0, 1]`.
pub fn far(c: &ConfusionCounts, mode: FarMode) -> f64 {
    match mode {
        FarMode::Conventional => ratio(c.fp, c.fp + c.tn),
        FarMode::PaperLiteral => ratio(c.fp, c.tp + c.tn).min(1.0),
    }
}

/// Harmonic mean of recall and `1 − far`; 0 when both are 0.
pub fn g_score(recall: f64, far: f64) -> f64 {
    let spec = 1.0 - far;
    let den = recall + spec;
    if den == 0.0 { 0.0 } else { 2.0 * recall * spec / den }
}

pub fn g_score_of(predictions: &[bool], truth: &[bool], mode: FarMode) -> Result<f64, EvalError> {
    let c = confusion(predictions, truth)?;
    Ok(g_score(recall(&c), far(&c, mode)))
}

/// Share of true positives found when inspecting rows in predicted order
/// (predicted positives first, each group by ascending effort, ties by index)
/// until the next row would push cumulative effort past
/// `budget_fraction × total effort`. Zero when there are no positives.
pub fn popt_at(
    predictions: &[bool],
    truth: &[bool],
    efforts: &[f64],
    budget_fraction: f64,
) -> Result<f64, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), truth: truth.len() });
    }
    if efforts.len() != truth.len() {
        return Err(EvalError::LengthMismatch { predictions: efforts.len(), truth: truth.len() });
    }
    if let Some(bad) = efforts.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(EvalError::InvalidEffort(*bad));
    }
    let total: f64 = efforts.iter().sum();
    if total <= 0.0 {
        return Err(EvalError::ZeroEffort);
    }
    let positives = truth.iter().filter(|t| **t).count();
    if positives == 0 {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| {
        predictions[b]
            .cmp(&predictions[a])
            .then(efforts[a].total_cmp(&efforts[b]))
            .then(a.cmp(&b))
    });
    let budget = budget_fraction * total;
    // absorbs summation-order rounding when the budget is the whole total
    let slack = total * 1e-12;
    let mut spent = 0.0;
    let mut found = 0;
    for i in order {
        spent += efforts[i];
        if spent > budget + slack {
            break;
        }
        found += usize::from(truth[i]);
    }
    Ok(found as f64 / positives as f64)
}

pub fn popt20(predictions: &[bool], truth: &[bool], efforts: &[f64]) -> Result<f64, EvalError> {
    popt_at(predictions, truth, efforts, 0.2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub recall: f64,
    pub far: f64,
    pub g: f64,
    /// `None` when the rows carry no effort.
    pub popt20: Option<f64>,
    pub counts: ConfusionCounts,
}

pub fn metric_report(
    predictions: &[bool],
    truth: &[bool],
    efforts: &[f64],
    mode: FarMode,
) -> Result<MetricReport, EvalError> {
    let counts = confusion(predictions, truth)?;
    let (r, f) = (recall(&counts), far(&counts, mode));
    let popt = match popt20(predictions, truth, efforts) {
        Ok(v) => Some(v),
        Err(EvalError::ZeroEffort) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricReport { recall: r, far: f, g: g_score(r, f), popt20: popt, counts })
}
