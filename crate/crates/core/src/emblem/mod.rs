//! Active-learning labelling engine.
//!
//! A session walks through four phases driven by the number of positives
//! (bug-fixing commits) the human has confirmed so far:
//!
//! 1. `Random`: candidates come from a seeded permutation of the corpus until
//!    `n2` positives are seen.
//! 2. `Uncertainty`: a class-weighted linear SVM is retrained after each label
//!    and the unlabelled commits closest to its boundary are queried, until
//!    `n3` positives are seen.
//! 3. `Certainty`: the most confidently positive commits are queried; the SVM
//!    is retrained on all positives plus an equal number of the negatives
//!    lying farthest on the negative side of the previous model.
//! 4. `Stopped`: the remaining-positives estimate says at least `n4` of all
//!    positives have been found.
//!
//! Every decision is a pure function of `(corpus, params, label sequence)`,
//! so replaying a label log rebuilds an identical session.

mod estimate;
mod simulate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::linear::{self, balanced_weights, Example, LinearConfig, LinearModel, Loss};
use crate::seed;

pub use estimate::{stop_rule, EstimatorParams, RecallEstimate};
pub use simulate::{random_baseline_recall, run_with_oracle, Transcript, TranscriptRow};

/// SVM trainer settings.
pub type SvmHyperparams = LinearConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmblemParams {
    /// Vocabulary size.
    pub n1: usize,
    /// Positives needed before leaving random sampling.
    pub n2: usize,
    /// Positives needed before switching to certainty sampling.
    pub n3: usize,
    /// Target recall for the stopping rule.
    pub n4: f64,
    pub retrain_every: usize,
    pub seed: u64,
    pub svm: SvmHyperparams,
    pub estimator: EstimatorParams,
}

impl Default for EmblemParams {
    fn default() -> Self {
        Self {
            n1: crate::corpus::DEFAULT_N1,
            n2: 1,
            n3: 30,
            n4: 0.95,
            retrain_every: 1,
            seed: 0,
            svm: SvmHyperparams::default(),
            estimator: EstimatorParams::default(),
        }
    }
}

impl EmblemParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::InvalidParams(m));
        if !(self.n4 > 0.0 && self.n4 <= 1.0) {
            return bad(format!("n4 must be in (0, 1], got {}", self.n4));
        }
        if self.n2 > self.n3 {
            return bad(format!("n2 ({}) must not exceed n3 ({})", self.n2, self.n3));
        }
        if self.retrain_every == 0 {
            return bad("retrain_every must be >= 1".to_string());
        }
        if self.n1 == 0 {
            return bad("n1 must be >= 1".to_string());
        }
        self.svm.validate().map_err(SessionError::InvalidParams)?;
        self.estimator.validate().map_err(SessionError::InvalidParams)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Random,
    Uncertainty,
    Certainty,
    Stopped,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Random => "random",
            Phase::Uncertainty => "uncertainty",
            Phase::Certainty => "certainty",
            Phase::Stopped => "stopped",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown commit id: {0}")]
    UnknownId(String),
    #[error("commit {0} is already labelled")]
    AlreadyLabelled(String),
    #[error("candidate count must be >= 1")]
    ZeroCandidates,
    #[error("session has stopped")]
    Stopped,
    #[error("training needs at least one labelled example of each class")]
    OneClassEmpty,
    #[error("no model has been trained yet")]
    NoModel,
    #[error("truth is missing commit {0}")]
    MissingTruth(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub seq: u64,
    pub commit_id: String,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidates {
    pub ids: Vec<String>,
    /// No unlabelled commits remain.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOutcome {
    pub seq: u64,
    pub phase: Phase,
    pub estimated_recall: Option<f64>,
    pub should_stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub labelled: usize,
    pub positive: usize,
    pub negative: usize,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct Session {
    corpus: Arc<Corpus>,
    params: EmblemParams,
    labels: Vec<Option<bool>>,
    positives: BTreeSet<usize>,
    negatives: BTreeSet<usize>,
    phase: Phase,
    model: Option<LinearModel>,
    estimate: Option<RecallEstimate>,
    log: Vec<LabelRecord>,
    random_order: Vec<usize>,
}

impl PartialEq for Session {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.corpus, &other.corpus) || self.corpus == other.corpus)
            && self.params == other.params
            && self.labels == other.labels
            && self.phase == other.phase
            && self.model == other.model
            && self.estimate == other.estimate
            && self.log == other.log
            && self.random_order == other.random_order
    }
}

impl Session {
    /// Starts a session with nothing labelled. If the corpus was built with a
    /// different vocabulary size than `params.n1`, it is re-vectorized.
    pub fn start(corpus: Arc<Corpus>, params: EmblemParams) -> Result<Self, SessionError> {
        params.validate()?;
        if corpus.is_empty() {
            return Err(SessionError::EmptyCorpus);
        }
        let corpus = if corpus.n1() == params.n1 {
            corpus
        } else {
            Arc::new(corpus.with_vocabulary_size(params.n1))
        };
        let mut random_order: Vec<usize> = (0..corpus.len()).collect();
        random_order.shuffle(&mut seed::rng_for(params.seed, "emblem/random-order"));
        let phase = phase_for(0, &params);
        Ok(Self {
            labels: vec![None; corpus.len()],
            corpus,
            params,
            positives: BTreeSet::new(),
            negatives: BTreeSet::new(),
            phase,
            model: None,
            estimate: None,
            log: Vec::new(),
            random_order,
        })
    }

    /// Rebuilds a session by applying `labels` in order to a fresh one.
    pub fn replay<I, S>(corpus: Arc<Corpus>, params: EmblemParams, labels: I) -> Result<Self, SessionError>
    where
        I: IntoIterator<Item = (S, bool)>,
        S: AsRef<str>,
    {
        let mut session = Self::start(corpus, params)?;
        for (id, label) in labels {
            session.apply_label(id.as_ref(), label)?;
        }
        Ok(session)
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn params(&self) -> &EmblemParams {
        &self.params
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn model(&self) -> Option<&LinearModel> {
        self.model.as_ref()
    }

    pub fn estimate(&self) -> Option<&RecallEstimate> {
        self.estimate.as_ref()
    }

    pub fn log(&self) -> &[LabelRecord] {
        &self.log
    }

    pub fn label_of(&self, id: &str) -> Option<bool> {
        self.corpus.position(id).and_then(|i| self.labels[i])
    }

    /// Ids of confirmed positives, in corpus order.
    pub fn labelled_positive(&self) -> impl Iterator<Item = &str> {
        self.positives.iter().map(|&i| self.corpus.commit(i).id.as_str())
    }

    pub fn labelled_negative(&self) -> impl Iterator<Item = &str> {
        self.negatives.iter().map(|&i| self.corpus.commit(i).id.as_str())
    }

    pub fn counts(&self) -> Counts {
        Counts {
            labelled: self.positives.len() + self.negatives.len(),
            positive: self.positives.len(),
            negative: self.negatives.len(),
            total: self.corpus.len(),
        }
    }

    pub fn fraction_read(&self) -> f64 {
        let c = self.counts();
        c.labelled as f64 / c.total as f64
    }

    pub fn should_stop(&self) -> bool {
        self.phase == Phase::Stopped
    }

    /// Decision value of every commit under the current model (`None` before
    /// the first training).
    pub fn decision_values(&self) -> Option<Vec<f64>> {
        let model = self.model.as_ref()?;
        Some(self.corpus.vectors().iter().map(|v| model.decision(v)).collect())
    }

    pub fn next_candidates(&self, n: usize) -> Result<Candidates, SessionError> {
        if n == 0 {
            return Err(SessionError::ZeroCandidates);
        }
        if self.phase == Phase::Stopped {
            return Err(SessionError::Stopped);
        }
        let ranked = match (&self.model, self.phase) {
            (Some(model), Phase::Uncertainty) => self.rank_unlabelled(model, |d| d.abs()),
            (Some(model), Phase::Certainty) => self.rank_unlabelled(model, |d| -d),
            _ => self.random_order.iter().copied().filter(|&i| self.labels[i].is_none()).take(n).collect(),
        };
        let ids: Vec<String> = ranked.into_iter().take(n).map(|i| self.corpus.commit(i).id.clone()).collect();
        Ok(Candidates { exhausted: ids.is_empty(), ids })
    }

    /// Unlabelled indices sorted ascending by `key(decision)`, ties by id.
    fn rank_unlabelled(&self, model: &LinearModel, key: impl Fn(f64) -> f64) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = (0..self.corpus.len())
            .filter(|&i| self.labels[i].is_none())
            .map(|i| (key(model.decision(self.corpus.vector(i))), i))
            .collect();
        scored.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| self.corpus.commit(a.1).id.cmp(&self.corpus.commit(b.1).id))
        });
        scored.into_iter().map(|(_, i)| i).collect()
    }

    /// Records a human label and advances the session.
    pub fn apply_label(&mut self, id: &str, is_fixing: bool) -> Result<LabelOutcome, SessionError> {
        let idx = self.corpus.position(id).ok_or_else(|| SessionError::UnknownId(id.to_string()))?;
        if self.labels[idx].is_some() {
            return Err(SessionError::AlreadyLabelled(id.to_string()));
        }
        self.labels[idx] = Some(is_fixing);
        if is_fixing {
            self.positives.insert(idx);
        } else {
            self.negatives.insert(idx);
        }
        let seq = self.log.len() as u64 + 1;
        self.log.push(LabelRecord { seq, commit_id: id.to_string(), label: is_fixing });

        if self.phase != Phase::Stopped {
            self.phase = phase_for(self.positives.len(), &self.params);
        }
        let labelled = self.positives.len() + self.negatives.len();
        if self.phase != Phase::Random
            && labelled.is_multiple_of(self.params.retrain_every)
            && !self.positives.is_empty()
            && !self.negatives.is_empty()
        {
            self.model = Some(self.retrain()?);
            if self.positives.len() >= self.params.n3 {
                let est = self.estimate_remaining()?;
                let stop = stop_rule(self.positives.len(), est.estimated_total_positives, self.params.n4);
                self.estimate = Some(est);
                if stop {
                    self.phase = Phase::Stopped;
                }
            }
        }
        Ok(LabelOutcome {
            seq,
            phase: self.phase,
            estimated_recall: self.estimate.as_ref().map(|e| e.estimated_recall),
            should_stop: self.should_stop(),
        })
    }

    /// Trains the SVM for the current phase without installing it.
    ///
    /// Before `n3` positives: all labelled commits, class weights
    /// proportional to `1/|L_B|` and `1/|L_N|`. From `n3` on: all positives
    /// plus the `|L_B|` negatives with the lowest decision value under the
    /// previous model, unweighted.
    pub fn retrain(&self) -> Result<LinearModel, SessionError> {
        if self.positives.is_empty() || self.negatives.is_empty() {
            return Err(SessionError::OneClassEmpty);
        }
        if self.positives.len() < self.params.n3 {
            return Ok(self.train_weighted());
        }
        let previous = match &self.model {
            Some(m) => m.clone(),
            None => self.train_weighted(),
        };
        let kept = self.undersampled_negatives(&previous);
        let mut examples: Vec<Example> = self
            .positives
            .iter()
            .map(|&i| Example::new(self.corpus.vector(i).entries(), true))
            .collect();
        examples.extend(kept.iter().map(|&i| Example::new(self.corpus.vector(i).entries(), false)));
        Ok(linear::train(self.dimension(), &examples, Loss::Hinge, &self.params.svm))
    }

    /// Negatives kept by aggressive undersampling under `previous`: the
    /// `|L_B|` with the lowest decision value (all of them when there are no
    /// more negatives than positives). Returned in corpus order.
    pub fn undersampled_negatives(&self, previous: &LinearModel) -> Vec<usize> {
        let keep = self.positives.len();
        if self.negatives.len() <= keep {
            return self.negatives.iter().copied().collect();
        }
        let mut scored: Vec<(f64, usize)> =
            self.negatives.iter().map(|&i| (previous.decision(self.corpus.vector(i)), i)).collect();
        scored.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| self.corpus.commit(a.1).id.cmp(&self.corpus.commit(b.1).id))
        });
        let mut kept: Vec<usize> = scored.into_iter().take(keep).map(|(_, i)| i).collect();
        kept.sort_unstable();
        kept
    }

    fn train_weighted(&self) -> LinearModel {
        let (wp, wn) = balanced_weights(self.positives.len(), self.negatives.len());
        let examples: Vec<Example> = self
            .positives
            .iter()
            .map(|&i| (i, true, wp))
            .chain(self.negatives.iter().map(|&i| (i, false, wn)))
            .map(|(i, positive, weight)| Example { x: self.corpus.vector(i).entries(), positive, weight })
            .collect();
        linear::train(self.dimension(), &examples, Loss::Hinge, &self.params.svm)
    }

    fn dimension(&self) -> usize {
        self.corpus.vocabulary().len()
    }

    #[cfg(test)]
    pub(crate) fn set_model(&mut self, model: LinearModel) {
        self.model = Some(model);
    }

    #[cfg(test)]
    pub(crate) fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }
}

fn phase_for(positives: usize, params: &EmblemParams) -> Phase {
    if positives < params.n2 {
        Phase::Random
    } else if positives < params.n3 {
        Phase::Uncertainty
    } else {
        Phase::Certainty
    }
}
