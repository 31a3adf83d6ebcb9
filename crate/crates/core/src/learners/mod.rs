//! Defect predictors over the 14 commit metrics.

mod fft;
mod forest;
mod linear;
mod smote;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Feature, FeatureVector};

pub use fft::{
    apply_fft, build_fft_variant, median_discretize, score_predictions, train_fft, FftLevel, FfTree, Side, TrainGoal,
};
pub use forest::{train_random_forest, DecisionTree, ForestConfig, ForestModel, Node};
pub use linear::{train_linear_svm, train_logistic, DenseLinearModel};
pub use smote::{smote, SmoteConfig, SmoteOutput, SyntheticRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelledRow {
    pub features: FeatureVector,
    /// Bug-inducing?
    pub label: bool,
}

impl LabelledRow {
    pub fn new(features: FeatureVector, label: bool) -> Self {
        Self { features, label }
    }

    /// Lines added plus lines deleted, the inspection effort.
    pub fn churn(&self) -> f64 {
        self.features[Feature::La.index()] + self.features[Feature::Ld.index()]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("training rows are empty")]
    Empty,
    #[error("training rows contain a single class")]
    SingleClass,
    #[error("minority class has {0} row(s); at least 2 are needed")]
    MinorityTooSmall(usize),
    #[error("empty column")]
    EmptyColumn,
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn check_both_classes(rows: &[LabelledRow]) -> Result<(), LearnerError> {
    if rows.is_empty() {
        return Err(LearnerError::Empty);
    }
    let positives = rows.iter().filter(|r| r.label).count();
    if positives == 0 || positives == rows.len() {
        return Err(LearnerError::SingleClass);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Fft,
    Lr,
    Svm,
    Rf,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [LearnerKind::Fft, LearnerKind::Lr, LearnerKind::Svm, LearnerKind::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Fft => "fft",
            LearnerKind::Lr => "lr",
            LearnerKind::Svm => "svm",
            LearnerKind::Rf => "rf",
        }
    }

    /// Whether training consumes randomness.
    pub fn is_stochastic(self) -> bool {
        matches!(self, LearnerKind::Rf)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fft" => Ok(LearnerKind::Fft),
            "lr" => Ok(LearnerKind::Lr),
            "svm" => Ok(LearnerKind::Svm),
            "rf" => Ok(LearnerKind::Rf),
            other => Err(format!("unknown learner {other:?} (expected fft, lr, svm or rf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub goal: TrainGoal,
    pub fft_depth: usize,
    pub linear: crate::linear::LinearConfig,
    pub forest: ForestConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            goal: TrainGoal::GScore,
            fft_depth: 4,
            linear: crate::linear::LinearConfig { l2_lambda: 0.01, epochs: 50 },
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Fft(FfTree),
    Linear(DenseLinearModel),
    Forest(ForestModel),
}

impl Model {
    pub fn predict(&self, features: &FeatureVector) -> bool {
        match self {
            Model::Fft(t) => apply_fft(t, features),
            Model::Linear(m) => m.predict(features),
            Model::Forest(f) => f.predict(features),
        }
    }

    pub fn predict_all(&self, rows: &[LabelledRow]) -> Vec<bool> {
        rows.iter().map(|r| self.predict(&r.features)).collect()
    }
}

pub fn train(kind: LearnerKind, rows: &[LabelledRow], config: &LearnerConfig, seed: u64) -> Result<Model, LearnerError> {
    match kind {
        LearnerKind::Fft => train_fft(rows, config.goal, config.fft_depth).map(Model::Fft),
        LearnerKind::Lr => train_logistic(rows, &config.linear).map(Model::Linear),
        LearnerKind::Svm => train_linear_svm(rows, &config.linear).map(Model::Linear),
        LearnerKind::Rf => train_random_forest(rows, &config.forest, seed).map(Model::Forest),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::corpus::FEATURE_COUNT;

    pub fn row(values: &[(Feature, f64)], label: bool) -> LabelledRow {
        let mut f = [0.0; FEATURE_COUNT];
        for (k, v) in values {
            f[k.index()] = *v;
        }
        LabelledRow::new(f, label)
    }

    /// Label is `LA > 50`; other columns are index-derived noise.
    pub fn separable(n: usize) -> Vec<LabelledRow> {
        (0..n)
            .map(|i| {
                let mut f = [0.0; FEATURE_COUNT];
                for (j, slot) in f.iter_mut().enumerate() {
                    *slot = ((i * 31 + j * 17) % 23) as f64;
                }
                f[Feature::La.index()] = (i * 37 % 100) as f64;
                f[Feature::Ld.index()] = 1.0 + (i % 5) as f64;
                LabelledRow::new(f, f[Feature::La.index()] > 50.0)
            })
            .collect()
    }
}
