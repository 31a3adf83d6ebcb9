//! Commit corpus: ingest, release structure and the TF-IDF feature space.

mod ingest;
mod links;
mod sanity;
pub mod text;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_csv, write_csv, ColumnSchema, IngestReport, RowError};
pub use links::{propagate_inducing, FixInducingLinks};
pub use sanity::{sanity_check, ProjectStats, SanityReport};
pub use text::{
    build_vocabulary, tokenize, tokenize_with, vectorize, vectorize_tokens, SparseVector, StopList,
    Term, Vocabulary,
};

/// Default vocabulary size.
pub const DEFAULT_N1: usize = 4000;

pub const FEATURE_COUNT: usize = 14;

/// The 14 commit-level change metrics, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Ns,
    Nd,
    Nf,
    Entropy,
    La,
    Ld,
    Lt,
    Fix,
    Ndev,
    Age,
    Nuc,
    Exp,
    Rexp,
    Sexp,
}

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::Ns,
        Feature::Nd,
        Feature::Nf,
        Feature::Entropy,
        Feature::La,
        Feature::Ld,
        Feature::Lt,
        Feature::Fix,
        Feature::Ndev,
        Feature::Age,
        Feature::Nuc,
        Feature::Exp,
        Feature::Rexp,
        Feature::Sexp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Display name (`NS`, `Entropy`, ...).
    pub fn name(self) -> &'static str {
        match self {
            Feature::Ns => "NS",
            Feature::Nd => "ND",
            Feature::Nf => "NF",
            Feature::Entropy => "Entropy",
            Feature::La => "LA",
            Feature::Ld => "LD",
            Feature::Lt => "LT",
            Feature::Fix => "FIX",
            Feature::Ndev => "NDEV",
            Feature::Age => "AGE",
            Feature::Nuc => "NUC",
            Feature::Exp => "EXP",
            Feature::Rexp => "REXP",
            Feature::Sexp => "SEXP",
        }
    }

    /// Lowercase CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Feature::Ns => "ns",
            Feature::Nd => "nd",
            Feature::Nf => "nf",
            Feature::Entropy => "entropy",
            Feature::La => "la",
            Feature::Ld => "ld",
            Feature::Lt => "lt",
            Feature::Fix => "fix",
            Feature::Ndev => "ndev",
            Feature::Age => "age",
            Feature::Nuc => "nuc",
            Feature::Exp => "exp",
            Feature::Rexp => "rexp",
            Feature::Sexp => "sexp",
        }
    }

    fn non_negative(self) -> bool {
        matches!(
            self,
            Feature::La
                | Feature::Ld
                | Feature::Lt
                | Feature::Ns
                | Feature::Nd
                | Feature::Nf
                | Feature::Ndev
                | Feature::Nuc
                | Feature::Entropy
        )
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type FeatureVector = [f64; FEATURE_COUNT];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    #[serde(default)]
    pub project: String,
    pub release_index: u32,
    pub timestamp: i64,
    pub message: String,
    pub features: FeatureVector,
    #[serde(default)]
    pub truth_fixing: Option<bool>,
    #[serde(default)]
    pub truth_inducing: Option<bool>,
}

impl CommitRecord {
    pub fn feature(&self, f: Feature) -> f64 {
        self.features[f.index()]
    }

    /// Churn (LA + LD), the inspection-effort proxy.
    pub fn churn(&self) -> f64 {
        self.feature(Feature::La) + self.feature(Feature::Ld)
    }

    /// Checks the per-record invariants on the metric values.
    pub fn validate(&self) -> Result<(), String> {
        for f in Feature::ALL {
            let v = self.feature(f);
            if !v.is_finite() {
                return Err(format!("{} is not finite", f.column()));
            }
            if f.non_negative() && v < 0.0 {
                return Err(format!("{} must be >= 0 (got {v})", f.column()));
            }
        }
        let fix = self.feature(Feature::Fix);
        if fix != 0.0 && fix != 1.0 {
            return Err(format!("fix must be 0 or 1 (got {fix})"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate commit id: {0}")]
    DuplicateId(String),
    #[error("invalid commit {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("unknown commit id: {0}")]
    UnknownId(String),
}

/// Options controlling the feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOptions {
    pub n1: usize,
    pub stopwords: StopList,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self { n1: DEFAULT_N1, stopwords: StopList::default() }
    }
}

/// Immutable commit collection with its vocabulary and document vectors.
///
/// Commits are ordered by release, then timestamp, then id.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    commits: Vec<CommitRecord>,
    vocabulary: Vocabulary,
    vectors: Vec<SparseVector>,
    releases: Vec<u32>,
    index: HashMap<String, usize>,
    options: CorpusOptions,
}

impl Corpus {
    pub fn from_records(
        mut commits: Vec<CommitRecord>,
        options: CorpusOptions,
    ) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for c in &commits {
            if !seen.insert(c.id.as_str()) {
                return Err(CorpusError::DuplicateId(c.id.clone()));
            }
            c.validate()
                .map_err(|reason| CorpusError::InvalidRecord { id: c.id.clone(), reason })?;
        }
        commits.sort_by(|a, b| {
            a.release_index
                .cmp(&b.release_index)
                .then(a.timestamp.cmp(&b.timestamp))
                .then_with(|| a.id.cmp(&b.id))
        });
        let tokens: Vec<Vec<String>> =
            commits.iter().map(|c| tokenize_with(&c.message, &options.stopwords)).collect();
        let vocabulary = build_vocabulary(&tokens, options.n1);
        let vectors = tokens.iter().map(|t| vectorize_tokens(t, &vocabulary)).collect();
        let releases: BTreeSet<u32> = commits.iter().map(|c| c.release_index).collect();
        let index = commits.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        Ok(Self {
            commits,
            vocabulary,
            vectors,
            releases: releases.into_iter().collect(),
            index,
            options,
        })
    }

    /// Same commits under a different vocabulary size.
    pub fn with_vocabulary_size(&self, n1: usize) -> Self {
        let options = CorpusOptions { n1, stopwords: self.options.stopwords.clone() };
        Self::from_records(self.commits.clone(), options)
            .expect("records were validated on first construction")
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn commits(&self) -> &[CommitRecord] {
        &self.commits
    }

    pub fn commit(&self, i: usize) -> &CommitRecord {
        &self.commits[i]
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &SparseVector {
        &self.vectors[i]
    }

    pub fn vector_of(&self, id: &str) -> Option<&SparseVector> {
        self.position(id).map(|i| &self.vectors[i])
    }

    pub fn releases(&self) -> &[u32] {
        &self.releases
    }

    pub fn options(&self) -> &CorpusOptions {
        &self.options
    }

    pub fn n1(&self) -> usize {
        self.options.n1
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.commits.iter().map(|c| c.id.as_str())
    }

    /// Commits of one release, in corpus order.
    pub fn release(&self, release: u32) -> impl Iterator<Item = &CommitRecord> {
        self.commits.iter().filter(move |c| c.release_index == release)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &CorpusFile::from(self))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let stored: CorpusFile = serde_json::from_reader(file)?;
        stored.into_corpus()
    }

    pub fn to_json(&self) -> Result<String, CorpusError> {
        Ok(serde_json::to_string(&CorpusFile::from(self))?)
    }
}

/// On-disk form: the records plus what is needed to rebuild the feature space
/// deterministically.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusFile {
    n1: usize,
    stopwords: Vec<String>,
    commits: Vec<CommitRecord>,
}

impl From<&Corpus> for CorpusFile {
    fn from(c: &Corpus) -> Self {
        Self {
            n1: c.options.n1,
            stopwords: c.options.stopwords.sorted_words(),
            commits: c.commits.clone(),
        }
    }
}

impl CorpusFile {
    fn into_corpus(self) -> Result<Corpus, CorpusError> {
        let options = CorpusOptions { n1: self.n1, stopwords: StopList::from_words(self.stopwords) };
        Corpus::from_records(self.commits, options)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(id: &str, release: u32, ts: i64, message: &str) -> CommitRecord {
        CommitRecord {
            id: id.to_string(),
            project: "p".to_string(),
            release_index: release,
            timestamp: ts,
            message: message.to_string(),
            features: [1.0; FEATURE_COUNT],
            truth_fixing: None,
            truth_inducing: None,
        }
    }

    #[test]
    fn orders_by_release_then_timestamp() {
        let c = Corpus::from_records(
            vec![record("c", 1, 5, "x"), record("a", 0, 9, "y"), record("b", 0, 3, "z")],
            CorpusOptions::default(),
        )
        .unwrap();
        let ids: Vec<&str> = c.ids().collect();
        assert_eq!(ids, vec!["b", "a", "c"]);
        assert_eq!(c.releases(), &[0, 1]);
        assert_eq!(c.position("c"), Some(2));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Corpus::from_records(
            vec![record("a", 0, 1, "x"), record("a", 0, 2, "y")],
            CorpusOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "a"));
    }

    #[test]
    fn invalid_metrics_rejected() {
        let mut r = record("a", 0, 1, "x");
        r.features[Feature::Fix.index()] = 0.5;
        assert!(r.validate().is_err());
        r.features[Feature::Fix.index()] = 1.0;
        r.features[Feature::La.index()] = -1.0;
        assert!(r.validate().is_err());
        // AGE, EXP and friends may be negative in some exports
        r.features[Feature::La.index()] = 0.0;
        r.features[Feature::Age.index()] = -3.0;
        assert!(r.validate().is_ok());
    }

    #[test]
    fn save_load_round_trip() {
        let c = Corpus::from_records(
            vec![record("a", 0, 1, "fix crash in parser"), record("b", 1, 2, "add docs")],
            CorpusOptions { n1: 3, ..Default::default() },
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("emblem-core-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corpus.json");
        c.save(&path).unwrap();
        assert_eq!(Corpus::load(&path).unwrap(), c);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn vocabulary_resize() {
        let c = Corpus::from_records(
            vec![record("a", 0, 1, "alpha beta gamma"), record("b", 0, 2, "alpha delta")],
            CorpusOptions::default(),
        )
        .unwrap();
        assert_eq!(c.vocabulary().len(), 4);
        let small = c.with_vocabulary_size(1);
        assert_eq!(small.vocabulary().len(), 1);
        assert_eq!(small.vocabulary().terms()[0].token, "alpha");
    }
}
