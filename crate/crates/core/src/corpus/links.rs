use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Precomputed fix → inducing commit links (e.g. the output of an SZZ run).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixInducingLinks {
    pub links: BTreeMap<String, BTreeSet<String>>,
}

impl FixInducingLinks {
    /// JSON object mapping fix id to an array of inducing ids.
    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self, CorpusError> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn insert(&mut self, fix: &str, inducing: &str) {
        self.links.entry(fix.to_string()).or_default().insert(inducing.to_string());
    }
}

/// A commit is inducing iff some commit labelled fixing links to it.
///
/// `ids` is the corpus universe; the result has an entry for each of them.
pub fn propagate_inducing<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    fixing: &BTreeMap<String, bool>,
    links: &FixInducingLinks,
) -> Result<BTreeMap<String, bool>, CorpusError> {
    let mut out: BTreeMap<String, bool> = ids.into_iter().map(|id| (id.to_string(), false)).collect();
    for (fix, targets) in &links.links {
        if !out.contains_key(fix) {
            return Err(CorpusError::UnknownId(fix.clone()));
        }
        if let Some(t) = targets.iter().find(|t| !out.contains_key(t.as_str())) {
            return Err(CorpusError::UnknownId(t.clone()));
        }
    }
    for (fix, targets) in &links.links {
        if fixing.get(fix).copied().unwrap_or(false) {
            for t in targets {
                out.insert(t.clone(), true);
            }
        }
    }
    Ok(out)
}
