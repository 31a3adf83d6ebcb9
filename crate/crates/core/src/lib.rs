//! Human+machine labelling of bug-fixing commits and commit-level defect
//! prediction.
//!
//! The crate is split along the pipeline:
//!
//! - [`corpus`]: CSV ingest, tokenization, TF-IDF feature space, release
//!   structure and fix→inducing label propagation.
//! - [`keyword`]: the keyword labelling baseline.
//! - [`emblem`]: the active-learning labelling engine (staged sampling,
//!   undersampling, remaining-positives estimate, stopping rule).
//! - [`linear`]: the shared deterministic linear trainer (hinge and log loss).
//! - [`learners`]: defect predictors over the 14 commit metrics (FFT, LR, SVM,
//!   random forest) and SMOTE.
//! - [`eval`]: metrics, the release-pair rig and win tables.
//! - [`stats`]: A12, bootstrap significance and Scott-Knott ranking.
//! - [`cost`]: labelling cost arithmetic.

pub mod corpus;
pub mod cost;
pub mod emblem;
pub mod eval;
pub mod keyword;
pub mod labels;
pub mod learners;
pub mod linear;
pub mod seed;
pub mod stats;
pub mod synthetic;

pub use corpus::{CommitRecord, Corpus, Feature, FEATURE_COUNT};
pub use emblem::{EmblemParams, Phase, Session};
