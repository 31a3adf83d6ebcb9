//! Train on release `r`, test on release `r + 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{g_score_of, popt20, FarMode};
use super::EvalError;
use crate::corpus::Corpus;
use crate::learners::{self, smote, LabelledRow, LearnerConfig, LearnerError, LearnerKind, SmoteConfig, TrainGoal};
use crate::seed;

/// One labelling method paired with one learner.
#[derive(Debug, Clone)]
pub struct TreatmentSpec {
    pub name: String,
    /// Bug-inducing labels; commits without an entry count as clean.
    pub labels: Arc<BTreeMap<String, bool>>,
    pub learner: LearnerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    pub learner: LearnerConfig,
    /// Metric reported per pair; also the FFT training goal.
    pub goal: TrainGoal,
    pub repeats: usize,
    pub seed: u64,
    pub smote: Option<SmoteConfig>,
    pub far_mode: FarMode,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            learner: LearnerConfig::default(),
            goal: TrainGoal::GScore,
            repeats: 20,
            seed: 0,
            smote: None,
            far_mode: FarMode::Conventional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub train_release: u32,
    pub test_release: u32,
    /// Treatment name → one value per repeat.
    pub values: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub train_release: u32,
    pub test_release: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigReport {
    pub pairs: Vec<PairResult>,
    pub skipped: Vec<SkippedPair>,
}

/// Rows of one release labelled from `labels` (absent ids are negative).
pub fn rows_for_release(corpus: &Corpus, release: u32, labels: &BTreeMap<String, bool>) -> Vec<LabelledRow> {
    corpus
        .release(release)
        .map(|c| LabelledRow::new(c.features, labels.get(&c.id).copied().unwrap_or(false)))
        .collect()
}

struct Job<'a> {
    pair: usize,
    treatment: &'a TreatmentSpec,
    repeat: usize,
}

/// For every consecutive release pair, trains each treatment on the earlier
/// release with its own labels and scores it on the later one against
/// `truth` (or, without shared truth, against the treatment's own labels).
/// Stochastic runs (random forest or SMOTE) are repeated `repeats` times with
/// derived seeds; deterministic ones are computed once and replicated.
pub fn evaluate_release_pairs(
    corpus: &Corpus,
    treatments: &[TreatmentSpec],
    truth: Option<&BTreeMap<String, bool>>,
    config: &RigConfig,
) -> Result<RigReport, EvalError> {
    let releases = corpus.releases();
    if releases.len() < 2 {
        return Err(EvalError::TooFewReleases(releases.len()));
    }
    if treatments.is_empty() {
        return Err(EvalError::NoTreatments);
    }
    if config.repeats == 0 {
        return Err(EvalError::ZeroRepeats);
    }
    let mut names = BTreeSet::new();
    for t in treatments {
        if !names.insert(t.name.as_str()) {
            return Err(EvalError::DuplicateTreatment(t.name.clone()));
        }
    }

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for w in releases.windows(2) {
        let (train, test) = (w[0], w[1]);
        let single = treatments.iter().find(|t| {
            let rows = rows_for_release(corpus, train, &t.labels);
            let pos = rows.iter().filter(|r| r.label).count();
            pos == 0 || pos == rows.len()
        });
        if let Some(t) = single {
            skipped.push(SkippedPair {
                train_release: train,
                test_release: test,
                reason: format!("treatment {} has a single class in training release {train}", t.name),
            });
            continue;
        }
        pairs.push((train, test));
    }

    let stochastic = |t: &TreatmentSpec| t.learner.is_stochastic() || config.smote.is_some();
    let jobs: Vec<Job> = pairs
        .iter()
        .enumerate()
        .flat_map(|(p, _)| {
            treatments.iter().flat_map(move |t| {
                let runs = if stochastic(t) { config.repeats } else { 1 };
                (0..runs).map(move |repeat| Job { pair: p, treatment: t, repeat })
            })
        })
        .collect();

    let results: Vec<Result<f64, EvalError>> = jobs
        .par_iter()
        .map(|job| {
            let (train, test) = pairs[job.pair];
            run_one(corpus, job.treatment, truth, config, train, test, job.repeat)
        })
        .collect();

    let mut out: Vec<PairResult> = pairs
        .iter()
        .map(|&(train, test)| PairResult { train_release: train, test_release: test, values: BTreeMap::new() })
        .collect();
    let mut failed: BTreeMap<usize, String> = BTreeMap::new();
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(v) => out[job.pair].values.entry(job.treatment.name.clone()).or_default().push(v),
            Err(e) => {
                failed.entry(job.pair).or_insert_with(|| format!("{}: {e}", job.treatment.name));
            }
        }
    }
    for pr in &mut out {
        for v in pr.values.values_mut() {
            if v.len() == 1 {
                *v = vec![v[0]; config.repeats];
            }
        }
    }
    let mut kept = Vec::new();
    for (i, pr) in out.into_iter().enumerate() {
        match failed.remove(&i) {
            Some(reason) => skipped.push(SkippedPair { train_release: pr.train_release, test_release: pr.test_release, reason }),
            None => kept.push(pr),
        }
    }
    skipped.sort_by_key(|s| s.train_release);
    Ok(RigReport { pairs: kept, skipped })
}

fn run_one(
    corpus: &Corpus,
    treatment: &TreatmentSpec,
    truth: Option<&BTreeMap<String, bool>>,
    config: &RigConfig,
    train: u32,
    test: u32,
    repeat: usize,
) -> Result<f64, EvalError> {
    // shared across label sets so treatments differing only in labels see the same randomness
    let run_seed = seed::derive_seed(config.seed, &format!("rig/{train}/{}/{repeat}", treatment.learner));
    let mut rows = rows_for_release(corpus, train, &treatment.labels);
    if let Some(sc) = &config.smote {
        match smote(&rows, sc, run_seed) {
            Ok(out) => rows = out.rows,
            // too few minority rows to interpolate: train on the data as is
            Err(LearnerError::MinorityTooSmall(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let mut learner = config.learner.clone();
    learner.goal = config.goal;
    let model = learners::train(treatment.learner, &rows, &learner, run_seed)?;
    let test_rows = rows_for_release(corpus, test, truth.unwrap_or(&treatment.labels));
    let predictions = model.predict_all(&test_rows);
    let actual: Vec<bool> = test_rows.iter().map(|r| r.label).collect();
    match config.goal {
        TrainGoal::GScore => g_score_of(&predictions, &actual, config.far_mode),
        TrainGoal::Popt20 => {
            let effort: Vec<f64> = test_rows.iter().map(|r| r.churn()).collect();
            popt20(&predictions, &actual, &effort)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusOptions;
    use crate::synthetic::{defect_corpus, DefectCorpusSpec};

    fn corpus(releases: u32) -> (Corpus, BTreeMap<String, bool>) {
        let recs = defect_corpus(&DefectCorpusSpec { releases, commits_per_release: 80, signal: 1.0 }, 5);
        let truth = recs.iter().map(|r| (r.id.clone(), r.truth_inducing.unwrap())).collect();
        (Corpus::from_records(recs, CorpusOptions::default()).unwrap(), truth)
    }

    fn spec(name: &str, labels: &BTreeMap<String, bool>, learner: LearnerKind) -> TreatmentSpec {
        TreatmentSpec { name: name.to_string(), labels: Arc::new(labels.clone()), learner }
    }

    #[test]
    fn three_releases_give_two_pairs() {
        let (c, truth) = corpus(3);
        let cfg = RigConfig { repeats: 5, ..Default::default() };
        let r = evaluate_release_pairs(&c, &[spec("t", &truth, LearnerKind::Lr)], None, &cfg).unwrap();
        assert_eq!(r.pairs.len(), 2);
        for p in &r.pairs {
            let v = &p.values["t"];
            assert_eq!(v.len(), 5);
            assert!(v.iter().all(|x| *x == v[0]));
        }
    }

    #[test]
    fn one_release_is_an_error() {
        let (c, truth) = corpus(1);
        let err = evaluate_release_pairs(&c, &[spec("t", &truth, LearnerKind::Fft)], None, &RigConfig::default());
        assert_eq!(err.unwrap_err(), EvalError::TooFewReleases(1));
    }

    #[test]
    fn single_class_training_release_is_skipped() {
        let (c, _) = corpus(3);
        let labels: BTreeMap<String, bool> = c
            .commits()
            .iter()
            .map(|r| (r.id.clone(), r.release_index > 0 && r.truth_inducing.unwrap()))
            .collect();
        let cfg = RigConfig { repeats: 2, ..Default::default() };
        let r = evaluate_release_pairs(&c, &[spec("t", &labels, LearnerKind::Svm)], None, &cfg).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].train_release, 0);
    }

    #[test]
    fn stochastic_runs_are_seeded_and_repeated() {
        let (c, truth) = corpus(2);
        let mut cfg = RigConfig { repeats: 3, ..Default::default() };
        cfg.learner.forest.n_trees = 10;
        let t = [spec("rf", &truth, LearnerKind::Rf)];
        let a = evaluate_release_pairs(&c, &t, Some(&truth), &cfg).unwrap();
        let b = evaluate_release_pairs(&c, &t, Some(&truth), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pairs[0].values["rf"].len(), 3);
    }

    #[test]
    fn smote_and_popt20_run() {
        let (c, truth) = corpus(2);
        let cfg = RigConfig {
            repeats: 2,
            goal: TrainGoal::Popt20,
            smote: Some(SmoteConfig::default()),
            ..Default::default()
        };
        let r = evaluate_release_pairs(&c, &[spec("fft", &truth, LearnerKind::Fft)], None, &cfg).unwrap();
        for v in &r.pairs[0].values["fft"] {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn identical_labels_give_identical_stochastic_values() {
        let (c, truth) = corpus(2);
        let mut cfg = RigConfig { repeats: 3, smote: Some(SmoteConfig::default()), ..Default::default() };
        cfg.learner.forest.n_trees = 5;
        let t = [spec("a", &truth, LearnerKind::Rf), spec("b", &truth, LearnerKind::Rf)];
        let r = evaluate_release_pairs(&c, &t, None, &cfg).unwrap();
        assert_eq!(r.pairs[0].values["a"], r.pairs[0].values["b"]);
    }

    #[test]
    fn duplicate_names_rejected() {
        let (c, truth) = corpus(2);
        let t = [spec("x", &truth, LearnerKind::Lr), spec("x", &truth, LearnerKind::Svm)];
        assert!(matches!(
            evaluate_release_pairs(&c, &t, None, &RigConfig::default()),
            Err(EvalError::DuplicateTreatment(_))
        ));
    }
}
