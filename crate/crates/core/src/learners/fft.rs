//! Fast-and-frugal trees.
//!
//! A depth-`d` tree is a decision list: every level tests one feature against
//! the median of the rows that reached it and exits to a fixed class on one
//! side. The `d` exit classes form a bit pattern; all `2^d` patterns are
//! built and the one scoring best on the training rows under the chosen goal
//! is kept.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, LabelledRow, LearnerError};
use crate::corpus::{FeatureVector, FEATURE_COUNT};
use crate::eval::metrics::{g_score_of, popt20, FarMode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainGoal {
    #[default]
    #[serde(alias = "g")]
    GScore,
    Popt20,
}

impl std::str::FromStr for TrainGoal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" | "gscore" | "g-score" => Ok(TrainGoal::GScore),
            "popt20" | "popt" => Ok(TrainGoal::Popt20),
            other => Err(format!("unknown goal {other:?} (expected g or popt20)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `value ≤ threshold`
    Le,
    /// `value > threshold`
    Gt,
}

impl Side {
    pub fn matches(self, value: f64, threshold: f64) -> bool {
        match self {
            Side::Le => value <= threshold,
            Side::Gt => value > threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftLevel {
    pub feature: usize,
    pub side: Side,
    pub threshold: f64,
    pub exit_class: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfTree {
    pub levels: Vec<FftLevel>,
    pub final_other_class: bool,
    pub structure_bits: Vec<bool>,
    pub training_score: f64,
    /// Rows ran out before every level could be built.
    pub truncated: bool,
}

impl FfTree {
    /// The bit pattern read as a binary number, first level most significant.
    pub fn pattern_value(&self) -> u32 {
        self.structure_bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
    }
}

/// Lower median (the smaller middle value for even lengths).
pub fn median_discretize(column: &[f64]) -> Result<f64, LearnerError> {
    if column.is_empty() {
        return Err(LearnerError::EmptyColumn);
    }
    let mut v = column.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v[(v.len() - 1) / 2])
}

pub fn apply_fft(tree: &FfTree, features: &FeatureVector) -> bool {
    for level in &tree.levels {
        if level.side.matches(features[level.feature], level.threshold) {
            return level.exit_class;
        }
    }
    tree.final_other_class
}

/// Goal score of `predictions` on `rows`. Popt20 of rows without any churn
/// scores 0.
pub fn score_predictions(goal: TrainGoal, predictions: &[bool], rows: &[&LabelledRow]) -> f64 {
    let truth: Vec<bool> = rows.iter().map(|r| r.label).collect();
    match goal {
        TrainGoal::GScore => g_score_of(predictions, &truth, FarMode::Conventional).unwrap_or(0.0),
        TrainGoal::Popt20 => {
            let effort: Vec<f64> = rows.iter().map(|r| r.churn()).collect();
            popt20(predictions, &truth, &effort).unwrap_or(0.0)
        }
    }
}

fn bits_of(value: u32, depth: usize) -> Vec<bool> {
    (0..depth).map(|i| (value >> (depth - 1 - i)) & 1 == 1).collect()
}

/// Builds the tree for one exit pattern. At each level every (feature, side)
/// candidate is scored as a complete classifier on the surviving rows (exit
/// side → `bits[i]`, rest → `!bits[i]`); the first best wins, in feature
/// order with `Le` before `Gt`.
pub fn build_fft_variant(rows: &[LabelledRow], bits: &[bool], goal: TrainGoal) -> Result<FfTree, LearnerError> {
    if rows.is_empty() {
        return Err(LearnerError::Empty);
    }
    if bits.is_empty() {
        return Err(LearnerError::InvalidConfig("FFT depth must be >= 1".to_string()));
    }
    let mut surviving: Vec<&LabelledRow> = rows.iter().collect();
    let mut levels = Vec::with_capacity(bits.len());
    let mut predictions = vec![false; rows.len()];
    for &exit_class in bits {
        if surviving.is_empty() {
            break;
        }
        let mut best: Option<(f64, FftLevel)> = None;
        for feature in 0..FEATURE_COUNT {
            let column: Vec<f64> = surviving.iter().map(|r| r.features[feature]).collect();
            let threshold = median_discretize(&column)?;
            for side in [Side::Le, Side::Gt] {
                predictions.clear();
                predictions.extend(column.iter().map(|&v| if side.matches(v, threshold) { exit_class } else { !exit_class }));
                let score = score_predictions(goal, &predictions, &surviving);
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, FftLevel { feature, side, threshold, exit_class }));
                }
            }
        }
        let (_, level) = best.expect("at least one candidate per level");
        surviving.retain(|r| !level.side.matches(r.features[level.feature], level.threshold));
        levels.push(level);
    }
    let truncated = levels.len() < bits.len();
    let final_other_class = !levels.last().map(|l| l.exit_class).unwrap_or(bits[0]);
    let mut tree = FfTree { levels, final_other_class, structure_bits: bits.to_vec(), training_score: 0.0, truncated };
    let all: Vec<&LabelledRow> = rows.iter().collect();
    let preds: Vec<bool> = rows.iter().map(|r| apply_fft(&tree, &r.features)).collect();
    tree.training_score = score_predictions(goal, &preds, &all);
    Ok(tree)
}

/// Best of all `2^depth` variants by training score; ties go to the lowest
/// pattern value.
pub fn train_fft(rows: &[LabelledRow], goal: TrainGoal, depth: usize) -> Result<FfTree, LearnerError> {
    check_both_classes(rows)?;
    if depth == 0 || depth > 16 {
        return Err(LearnerError::InvalidConfig(format!("FFT depth must be in 1..=16, got {depth}")));
    }
    let mut best: Option<FfTree> = None;
    for value in 0..(1u32 << depth) {
        let tree = build_fft_variant(rows, &bits_of(value, depth), goal)?;
        if best.as_ref().is_none_or(|b| tree.training_score > b.training_score) {
            best = Some(tree);
        }
    }
    Ok(best.expect("2^depth >= 2 variants"))
}
