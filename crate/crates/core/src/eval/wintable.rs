//! How often each treatment lands in the top Scott-Knott rank.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seed;
use crate::stats::{scott_knott, ScottKnottConfig, Treatment};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinRow {
    pub treatment: String,
    pub wins: usize,
    pub pairs: usize,
    pub percent: u64,
}

impl WinRow {
    /// `P (W/N)`.
    pub fn cell(&self) -> String {
        format!("{} ({}/{})", self.percent, self.wins, self.pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTable {
    pub rows: Vec<WinRow>,
}

impl WinTable {
    pub fn row(&self, treatment: &str) -> Option<&WinRow> {
        self.rows.iter().find(|r| r.treatment == treatment)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("treatment,wins,pairs,percent,cell\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},\"{}\"", r.treatment, r.wins, r.pairs, r.percent, r.cell());
        }
        out
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.treatment.len()).max().unwrap_or(0).max(9);
        let mut out = format!("{:<width$}  wins\n", "treatment");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {}", r.treatment, r.cell());
        }
        out
    }
}

/// `round(100·w/n)` with halves rounded up; 0 when `n` is 0.
pub fn percent_half_up(wins: usize, n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    ((200 * wins + n) / (2 * n)) as u64
}

/// Ranks the treatments of every pair with Scott-Knott and counts how often
/// each one is in rank 1. Every pair must contain the same treatments.
pub fn win_table(
    per_pair: &[BTreeMap<String, Vec<f64>>],
    config: &ScottKnottConfig,
    seed: u64,
) -> Result<WinTable, EvalError> {
    let mut wins: BTreeMap<String, usize> = BTreeMap::new();
    if let Some(first) = per_pair.first() {
        for name in first.keys() {
            wins.insert(name.clone(), 0);
        }
    }
    for (i, values) in per_pair.iter().enumerate() {
        if values.len() != wins.len() || values.keys().any(|k| !wins.contains_key(k)) {
            return Err(EvalError::LengthMismatch { predictions: values.len(), truth: wins.len() });
        }
        let treatments: Vec<Treatment> = values.iter().map(|(k, v)| Treatment::new(k.clone(), v.clone())).collect();
        let ranks = scott_knott(&treatments, config, seed::derive_seed(seed, &format!("wintable/{i}")))?;
        for (name, rank) in ranks {
            if rank == 1 {
                *wins.get_mut(&name).expect("names checked above") += 1;
            }
        }
    }
    let n = per_pair.len();
    let rows = wins
        .into_iter()
        .map(|(treatment, w)| WinRow { treatment, wins: w, pairs: n, percent: percent_half_up(w, n) })
        .collect();
    Ok(WinTable { rows })
}
