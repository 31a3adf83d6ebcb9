//! Keyword labelling baseline: a commit is bug-fixing when its lowercased
//! message contains any keyword of a "fixing" category as a substring.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

pub const CORRECTIVE: &str = "Corrective";

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("invalid rules file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("category {0:?} has an empty keyword")]
    EmptyKeyword(String),
    #[error("fixing category {0:?} is not defined")]
    UnknownCategory(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRuleSet {
    pub categories: BTreeMap<String, BTreeSet<String>>,
    pub fixing_categories: BTreeSet<String>,
}

impl Default for KeywordRuleSet {
    fn default() -> Self {
        let table: [(&str, &[&str]); 5] = [
            (CORRECTIVE, &["bug", "fix", "wrong", "error", "fail", "problem", "patch"]),
            ("Feature Addition", &["new", "add", "requirement", "initial", "create"]),
            ("Merge", &["merge"]),
            ("Perfective", &["clean", "better"]),
            ("Preventive", &["test", "junit", "coverage", "asset"]),
        ];
        let categories = table
            .iter()
            .map(|(c, kws)| (c.to_string(), kws.iter().map(|k| k.to_string()).collect()))
            .collect();
        Self { categories, fixing_categories: BTreeSet::from([CORRECTIVE.to_string()]) }
    }
}

impl KeywordRuleSet {
    /// Builds a rule set from `{category: [keywords]}`. Keywords are lowercased.
    pub fn new(
        categories: BTreeMap<String, Vec<String>>,
        fixing_categories: impl IntoIterator<Item = String>,
    ) -> Result<Self, RuleError> {
        let mut cats = BTreeMap::new();
        for (name, kws) in categories {
            let mut set = BTreeSet::new();
            for kw in kws {
                let kw = kw.trim().to_lowercase();
                if kw.is_empty() {
                    return Err(RuleError::EmptyKeyword(name));
                }
                set.insert(kw);
            }
            cats.insert(name, set);
        }
        let fixing: BTreeSet<String> = fixing_categories.into_iter().collect();
        if let Some(missing) = fixing.iter().find(|c| !cats.contains_key(*c)) {
            return Err(RuleError::UnknownCategory(missing.clone()));
        }
        Ok(Self { categories: cats, fixing_categories: fixing })
    }

    /// Reads `{category: [keywords]}`; `Corrective` is the fixing category.
    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self, RuleError> {
        let categories: BTreeMap<String, Vec<String>> = serde_json::from_reader(reader)?;
        let fixing: Vec<String> =
            categories.keys().filter(|c| c.as_str() == CORRECTIVE).cloned().collect();
        Self::new(categories, fixing)
    }

    pub fn with_fixing_categories(
        self,
        fixing: impl IntoIterator<Item = String>,
    ) -> Result<Self, RuleError> {
        let categories = self
            .categories
            .into_iter()
            .map(|(c, kws)| (c, kws.into_iter().collect()))
            .collect();
        Self::new(categories, fixing)
    }

    fn fixing_keywords(&self) -> impl Iterator<Item = &str> {
        self.fixing_categories
            .iter()
            .filter_map(|c| self.categories.get(c))
            .flatten()
            .map(String::as_str)
    }

    /// The rule set as a `{category: [keywords]}` JSON object.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.categories).expect("string maps always serialize")
    }
}

pub fn label_by_keywords(message: &str, rules: &KeywordRuleSet) -> bool {
    let lower = message.to_lowercase();
    rules.fixing_keywords().any(|kw| lower.contains(kw))
}

pub fn label_corpus(corpus: &Corpus, rules: &KeywordRuleSet) -> BTreeMap<String, bool> {
    corpus
        .commits()
        .iter()
        .map(|c| (c.id.clone(), label_by_keywords(&c.message, rules)))
        .collect()
}
