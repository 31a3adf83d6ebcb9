//! Metrics, the release-pair experiment rig and win tables.

pub mod metrics;
mod rig;
mod wintable;

use thiserror::Error;

use crate::learners::LearnerError;
use crate::stats::StatsError;

pub use metrics::{
    confusion, far, g_score, metric_report, popt20, popt_at, recall, ConfusionCounts, FarMode, MetricReport,
};
pub use rig::{evaluate_release_pairs, rows_for_release, PairResult, RigConfig, RigReport, SkippedPair, TreatmentSpec};
pub use wintable::{percent_half_up, win_table, WinRow, WinTable};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {predictions} predictions for {truth} truth values")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("effort values must be finite and non-negative, got {0}")]
    InvalidEffort(f64),
    #[error("total effort is zero")]
    ZeroEffort,
    #[error("need at least 2 releases, corpus has {0}")]
    TooFewReleases(usize),
    #[error("no treatments to evaluate")]
    NoTreatments,
    #[error("duplicate treatment name {0:?}")]
    DuplicateTreatment(String),
    #[error("repeats must be >= 1")]
    ZeroRepeats,
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
