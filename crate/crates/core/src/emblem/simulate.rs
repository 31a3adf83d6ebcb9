//! Oracle-driven sessions: the "human" answers from a ground-truth table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{EmblemParams, Phase, Session, SessionError};
use crate::corpus::Corpus;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRow {
    pub seq: u64,
    pub commit_id: String,
    pub label: bool,
    pub phase: Phase,
    pub estimated_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub rows: Vec<TranscriptRow>,
    pub reads: usize,
    pub corpus_size: usize,
    pub fraction_read: f64,
    pub positives_found: usize,
    pub total_positives: usize,
    /// `None` when the truth has no positives.
    pub true_recall: Option<f64>,
    pub stopped: bool,
    pub exhausted: bool,
}

impl Transcript {
    /// `seq,commit_id,label,phase,estimated_recall`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seq,commit_id,label,phase,estimated_recall\n");
        for r in &self.rows {
            let est = r.estimated_recall.map(|e| format!("{e:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", r.seq, r.commit_id, u8::from(r.label), r.phase, est);
        }
        out
    }
}

/// Runs a session to completion, answering each query from `truth`.
pub fn run_with_oracle(
    corpus: Arc<Corpus>,
    truth: &BTreeMap<String, bool>,
    params: EmblemParams,
) -> Result<Transcript, SessionError> {
    if let Some(missing) = corpus.ids().find(|id| !truth.contains_key(*id)) {
        return Err(SessionError::MissingTruth(missing.to_string()));
    }
    let total_positives = corpus.ids().filter(|id| truth[*id]).count();
    let mut session = Session::start(corpus, params)?;
    let mut rows = Vec::new();
    let mut exhausted = false;
    while session.phase() != Phase::Stopped {
        let candidates = session.next_candidates(1)?;
        let Some(id) = candidates.ids.into_iter().next() else {
            exhausted = true;
            break;
        };
        let label = truth[&id];
        let outcome = session.apply_label(&id, label)?;
        rows.push(TranscriptRow {
            seq: outcome.seq,
            commit_id: id,
            label,
            phase: outcome.phase,
            estimated_recall: outcome.estimated_recall,
        });
    }
    let counts = session.counts();
    Ok(Transcript {
        reads: counts.labelled,
        corpus_size: counts.total,
        fraction_read: session.fraction_read(),
        positives_found: counts.positive,
        total_positives,
        true_recall: (total_positives > 0).then(|| counts.positive as f64 / total_positives as f64),
        stopped: session.should_stop(),
        exhausted,
        rows,
    })
}

/// Recall of a labeller that reads `budget` uniformly random commits.
pub fn random_baseline_recall(truth: &[bool], budget: usize, seed: u64) -> Option<f64> {
    let total = truth.iter().filter(|t| **t).count();
    if total == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.shuffle(&mut seed::rng_for(seed, "emblem/random-baseline"));
    let found = order.iter().take(budget).filter(|&&i| truth[i]).count();
    Some(found as f64 / total as f64)
}
