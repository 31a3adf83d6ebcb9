//! Tokenization, stop-word removal and the TF-IDF feature space.
//!
//! Corpus score of token `t` over documents `D`:
//!
//! ```text
//! tfidf(t)    = Σ_d tfidf(t, d)
//! tfidf(t, d) = w_d^t · (ln(|D| / df(t)) + 1)
//! ```
//!
//! where `w_d^t` is the raw count of `t` in `d` and `df(t)` the number of
//! documents containing `t`. The vocabulary keeps the top-`n1` tokens by
//! corpus score (ties lexicographic); document vectors reuse the per-document
//! weights restricted to the vocabulary and are scaled to unit L2 norm.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
}

impl Default for StopList {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

impl StopList {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn from_path(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { words: words.into_iter().map(|w| w.into().to_lowercase()).collect() }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted word list, for stable persistence.
    pub fn sorted_words(&self) -> Vec<String> {
        let mut words: Vec<String> = self.words.iter().cloned().collect();
        words.sort();
        words
    }
}

/// Lowercase, split on non-alphanumeric characters, drop tokens shorter than
/// two characters, pure-digit tokens and stop words.
pub fn tokenize_with(message: &str, stop: &StopList) -> Vec<String> {
    message
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !t.chars().all(|c| c.is_ascii_digit()))
        .filter(|t| !stop.contains(t))
        .collect()
}

/// [`tokenize_with`] using the shipped English stop list.
pub fn tokenize(message: &str) -> Vec<String> {
    thread_local! {
        static DEFAULT: StopList = StopList::default();
    }
    DEFAULT.with(|stop| tokenize_with(message, stop))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub token: String,
    /// Corpus-wide TF-IDF score used for ranking.
    pub score: f64,
    /// `ln(|D| / df) + 1`.
    pub idf: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    terms: Vec<Term>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dimension(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, dim: u32) -> Option<&str> {
        self.terms.get(dim as usize).map(|t| t.token.as_str())
    }
}

pub fn build_vocabulary<S: AsRef<str>>(documents: &[Vec<S>], n1: usize) -> Vocabulary {
    let n_docs = documents.len();
    if n_docs == 0 || n1 == 0 {
        return Vocabulary::default();
    }
    // token -> (total count, document frequency)
    let mut stats: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for doc in documents {
        let mut seen: HashSet<&str> = HashSet::new();
        for tok in doc {
            let tok = tok.as_ref();
            let entry = stats.entry(tok).or_insert((0, 0));
            entry.0 += 1;
            if seen.insert(tok) {
                entry.1 += 1;
            }
        }
    }
    let mut terms: Vec<Term> = stats
        .into_iter()
        .map(|(token, (count, df))| {
            let idf = (n_docs as f64 / df as f64).ln() + 1.0;
            Term { token: token.to_string(), score: count as f64 * idf, idf }
        })
        .collect();
    terms.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.token.cmp(&b.token)));
    terms.truncate(n1);
    let index = terms.iter().enumerate().map(|(i, t)| (t.token.clone(), i as u32)).collect();
    Vocabulary { terms, index }
}

/// Sparse vector over vocabulary dimensions, entries sorted by dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary `(dim, value)` pairs; duplicates are summed and
    /// zero values dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (d, v) in pairs {
            *acc.entry(d).or_insert(0.0) += v;
        }
        Self { entries: acc.into_iter().filter(|(_, v)| *v != 0.0).collect() }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, dim: u32) -> f64 {
        self.entries
            .binary_search_by_key(&dim, |(d, _)| *d)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(d, v)| dense.get(d as usize).copied().unwrap_or(0.0) * v).sum()
    }

    pub fn max_dimension(&self) -> Option<u32> {
        self.entries.last().map(|(d, _)| *d)
    }

    fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            for (_, v) in &mut self.entries {
                *v /= norm;
            }
        }
        self
    }
}

/// Unit-norm TF-IDF vector of an already tokenized document.
pub fn vectorize_tokens<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    let pairs = tokens.iter().filter_map(|t| {
        let dim = vocab.dimension(t.as_ref())?;
        Some((dim, vocab.terms[dim as usize].idf))
    });
    SparseVector::from_pairs(pairs).normalized()
}

pub fn vectorize(message: &str, vocab: &Vocabulary, stop: &StopList) -> SparseVector {
    vectorize_tokens(&tokenize_with(message, stop), vocab)
}
