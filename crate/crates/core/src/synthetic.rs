//! Seeded synthetic corpora with planted signal, for simulations and tests.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CommitRecord, Feature, FEATURE_COUNT};
use crate::seed;

const SYLLABLES: [&str; 20] = [
    "ba", "ke", "di", "mo", "su", "ra", "te", "ni", "lo", "pu", "ga", "fe", "vi", "zo", "hu", "ja",
    "we", "xi", "co", "yu",
];

/// Tokens that mark a bug-fixing message in [`message_corpus`].
pub const SIGNAL_TOKENS: [&str; 10] = [
    "crash", "segfault", "regression", "leak", "overflow", "deadlock", "nullptr", "panic", "corrupt",
    "hang",
];

/// Pronounceable filler word; distinct indices give distinct words.
pub fn filler_word(index: usize) -> String {
    let n = SYLLABLES.len();
    format!("{}{}{}", SYLLABLES[index % n], SYLLABLES[(index / n) % n], SYLLABLES[(index / (n * n)) % n])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageCorpusSpec {
    pub commits: usize,
    pub positive_rate: f64,
    pub filler_vocabulary: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Probability that a negative message mentions a signal token anyway.
    pub leak_rate: f64,
    /// Probability that a positive message carries no signal token.
    pub silent_rate: f64,
}

impl Default for MessageCorpusSpec {
    fn default() -> Self {
        Self {
            commits: 5000,
            positive_rate: 0.15,
            filler_vocabulary: 2000,
            min_tokens: 5,
            max_tokens: 12,
            leak_rate: 0.03,
            silent_rate: 0.02,
        }
    }
}

fn skewed_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.gen();
    ((u * u) * n as f64) as usize % n
}

fn random_features(rng: &mut ChaCha8Rng) -> [f64; FEATURE_COUNT] {
    let mut f = [0.0; FEATURE_COUNT];
    f[Feature::Ns.index()] = rng.gen_range(1..4) as f64;
    f[Feature::Nd.index()] = rng.gen_range(1..6) as f64;
    f[Feature::Nf.index()] = rng.gen_range(1..12) as f64;
    f[Feature::Entropy.index()] = (rng.gen::<f64>() * 100.0).round() / 100.0;
    f[Feature::La.index()] = (rng.gen::<f64>().powi(3) * 800.0).round();
    f[Feature::Ld.index()] = (rng.gen::<f64>().powi(3) * 300.0).round();
    f[Feature::Lt.index()] = rng.gen_range(0..5000) as f64;
    f[Feature::Fix.index()] = f64::from(rng.gen_bool(0.3) as u8);
    f[Feature::Ndev.index()] = rng.gen_range(1..20) as f64;
    f[Feature::Age.index()] = (rng.gen::<f64>() * 365.0).round();
    f[Feature::Nuc.index()] = rng.gen_range(1..30) as f64;
    f[Feature::Exp.index()] = rng.gen_range(1..2000) as f64;
    f[Feature::Rexp.index()] = (rng.gen::<f64>() * 50.0).round() / 2.0;
    f[Feature::Sexp.index()] = rng.gen_range(0..500) as f64;
    f
}

/// Commit messages where positives carry one or two signal tokens among
/// skewed filler words. Returns the records (with `truth_fixing` set) and the
/// truth table.
pub fn message_corpus(spec: &MessageCorpusSpec, seed: u64) -> (Vec<CommitRecord>, BTreeMap<String, bool>) {
    let mut rng = seed::rng_for(seed, "synthetic/messages");
    let mut records = Vec::with_capacity(spec.commits);
    let mut truth = BTreeMap::new();
    for i in 0..spec.commits {
        let positive = rng.gen_bool(spec.positive_rate);
        let n_tokens = rng.gen_range(spec.min_tokens..=spec.max_tokens);
        let mut words: Vec<String> =
            (0..n_tokens).map(|_| filler_word(skewed_index(&mut rng, spec.filler_vocabulary))).collect();
        let signals = if positive {
            if rng.gen_bool(spec.silent_rate) { 0 } else { rng.gen_range(1..=2) }
        } else {
            usize::from(rng.gen_bool(spec.leak_rate))
        };
        for _ in 0..signals {
            let pos = rng.gen_range(0..=words.len());
            words.insert(pos, SIGNAL_TOKENS[rng.gen_range(0..SIGNAL_TOKENS.len())].to_string());
        }
        let id = format!("m{i:05}");
        records.push(CommitRecord {
            id: id.clone(),
            project: "synthetic".to_string(),
            release_index: 0,
            timestamp: i as i64,
            message: words.join(" "),
            features: random_features(&mut rng),
            truth_fixing: Some(positive),
            truth_inducing: None,
        });
        truth.insert(id, positive);
    }
    (records, truth)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectCorpusSpec {
    pub releases: u32,
    pub commits_per_release: usize,
    /// Strength of the planted metric signal; 0 makes labels pure noise.
    pub signal: f64,
}

impl Default for DefectCorpusSpec {
    fn default() -> Self {
        Self { releases: 4, commits_per_release: 150, signal: 1.0 }
    }
}

/// Commits whose `truth_inducing` label depends on churn, spread and
/// developer experience through a logistic link.
pub fn defect_corpus(spec: &DefectCorpusSpec, seed: u64) -> Vec<CommitRecord> {
    let mut rng = seed::rng_for(seed, "synthetic/defects");
    let mut records = Vec::new();
    for release in 0..spec.releases {
        for k in 0..spec.commits_per_release {
            let features = random_features(&mut rng);
            let risk = 0.9 * (1.0 + features[Feature::La.index()]).ln()
                + 0.6 * (1.0 + features[Feature::Nf.index()]).ln()
                + 1.2 * features[Feature::Entropy.index()]
                - 0.4 * (1.0 + features[Feature::Exp.index()]).ln()
                - 1.3;
            let p = crate::linear::sigmoid(spec.signal * risk + (1.0 - spec.signal) * 0.0 - 0.5);
            let inducing = rng.gen_bool(p.clamp(0.0, 1.0));
            let fixing = features[Feature::Fix.index()] == 1.0;
            let message = if fixing {
                format!("fix {} in {}", filler_word(rng.gen_range(0..50)), filler_word(rng.gen_range(0..200)))
            } else {
                format!("update {} {}", filler_word(rng.gen_range(0..200)), filler_word(rng.gen_range(0..200)))
            };
            let id = format!("r{release}c{k:04}");
            records.push(CommitRecord {
                id,
                project: "synthetic".to_string(),
                release_index: release,
                timestamp: i64::from(release) * 1_000_000 + k as i64,
                message,
                features,
                truth_fixing: Some(fixing),
                truth_inducing: Some(inducing),
            });
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filler_words_are_distinct_and_tokenizable() {
        let words: std::collections::BTreeSet<String> = (0..2000).map(filler_word).collect();
        assert_eq!(words.len(), 2000);
        for w in words.iter().take(50) {
            assert_eq!(crate::corpus::tokenize(w), vec![w.clone()]);
        }
        for s in SIGNAL_TOKENS {
            assert!(!words.contains(s));
        }
    }

    #[test]
    fn message_corpus_is_seeded() {
        let spec = MessageCorpusSpec { commits: 300, ..Default::default() };
        let (a, ta) = message_corpus(&spec, 3);
        let (b, tb) = message_corpus(&spec, 3);
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let pos = ta.values().filter(|v| **v).count();
        assert!((20..80).contains(&pos), "{pos}");
    }

    #[test]
    fn defect_corpus_has_both_classes_per_release() {
        let recs = defect_corpus(&DefectCorpusSpec::default(), 1);
        for r in 0..4 {
            let labels: Vec<bool> =
                recs.iter().filter(|c| c.release_index == r).map(|c| c.truth_inducing.unwrap()).collect();
            assert!(labels.iter().any(|l| *l) && labels.iter().any(|l| !*l));
        }
        for rec in &recs {
            rec.validate().unwrap();
        }
    }
}
