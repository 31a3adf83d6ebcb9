//! SMOTE class rebalancing.
//!
//! Both classes are brought to `ceil((|majority| + |minority|) / 2)` rows:
//! the majority is subsampled without replacement and the minority grows by
//! interpolating between a random minority row and one of its `k` nearest
//! minority neighbours. With `oversample_only` the majority is kept whole and
//! the minority grows to its size.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LabelledRow, LearnerError};
use crate::corpus::FEATURE_COUNT;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    pub oversample_only: bool,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self { k: 5, oversample_only: false }
    }
}

/// Where a synthetic row came from (indices into the input rows).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRow {
    pub output_index: usize,
    pub seed_row: usize,
    pub neighbour: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteOutput {
    /// Kept majority rows, then all minority rows, then synthetic rows.
    pub rows: Vec<LabelledRow>,
    pub synthetic: Vec<SyntheticRow>,
}

pub fn smote(rows: &[LabelledRow], config: &SmoteConfig, seed: u64) -> Result<SmoteOutput, LearnerError> {
    if config.k == 0 {
        return Err(LearnerError::InvalidConfig("SMOTE k must be >= 1".to_string()));
    }
    let pos: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].label).collect();
    let neg: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].label).collect();
    let (majority, minority) = if pos.len() > neg.len() { (pos, neg) } else { (neg, pos) };
    if minority.len() < 2 {
        return Err(LearnerError::MinorityTooSmall(minority.len()));
    }
    if majority.len() == minority.len() {
        return Ok(SmoteOutput { rows: rows.to_vec(), synthetic: Vec::new() });
    }
    let mut rng = seed::rng_for(seed, "smote");
    let target = if config.oversample_only {
        majority.len()
    } else {
        (majority.len() + minority.len()).div_ceil(2)
    };

    let mut kept: Vec<usize> = if target < majority.len() {
        index::sample(&mut rng, majority.len(), target).into_iter().map(|i| majority[i]).collect()
    } else {
        majority.clone()
    };
    kept.sort_unstable();
    let mut out: Vec<LabelledRow> = kept.iter().map(|&i| rows[i]).collect();
    out.extend(minority.iter().map(|&i| rows[i]));

    let (lo, hi) = ranges(rows);
    let normalized = |i: usize| -> [f64; FEATURE_COUNT] {
        let mut v = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            let span = hi[j] - lo[j];
            v[j] = if span > 0.0 { (rows[i].features[j] - lo[j]) / span } else { 0.0 };
        }
        v
    };
    let points: Vec<[f64; FEATURE_COUNT]> = minority.iter().map(|&i| normalized(i)).collect();
    let k = config.k.min(minority.len() - 1);
    let neighbours: Vec<Vec<usize>> = (0..minority.len())
        .map(|a| {
            let mut others: Vec<(f64, usize)> = (0..minority.len())
                .filter(|&b| b != a)
                .map(|b| (distance2(&points[a], &points[b]), b))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect();

    let label = rows[minority[0]].label;
    let mut synthetic = Vec::new();
    for _ in minority.len()..target {
        let a = rng.gen_range(0..minority.len());
        let b = neighbours[a][rng.gen_range(0..neighbours[a].len())];
        let r: f64 = rng.gen();
        let (x, y) = (&rows[minority[a]].features, &rows[minority[b]].features);
        let mut f = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            let v = x[j] + r * (y[j] - x[j]);
            // rounding must not leave the segment
            f[j] = v.clamp(x[j].min(y[j]), x[j].max(y[j]));
        }
        synthetic.push(SyntheticRow { output_index: out.len(), seed_row: minority[a], neighbour: minority[b], r });
        out.push(LabelledRow::new(f, label));
    }
    Ok(SmoteOutput { rows: out, synthetic })
}

fn ranges(rows: &[LabelledRow]) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
    let mut lo = [f64::INFINITY; FEATURE_COUNT];
    let mut hi = [f64::NEG_INFINITY; FEATURE_COUNT];
    for r in rows {
        for j in 0..FEATURE_COUNT {
            lo[j] = lo[j].min(r.features[j]);
            hi[j] = hi[j].max(r.features[j]);
        }
    }
    (lo, hi)
}

fn distance2(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}
