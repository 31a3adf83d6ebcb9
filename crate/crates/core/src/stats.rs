//! Effect size, bootstrap significance and Scott-Knott ranking.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("treatment {0:?} has no values")]
    EmptyTreatment(String),
    #[error("duplicate treatment name {0:?}")]
    DuplicateName(String),
    #[error("need at least {0} treatments")]
    TooFewTreatments(usize),
}

/// Twice the number of `(x, y)` pairs with `x > y` plus the number of ties,
/// and the total number of pairs. Sorting makes this `O((m + n) log n)`.
pub fn a12_counts(m: &[f64], n: &[f64]) -> Result<(u64, u64), StatsError> {
    if m.is_empty() || n.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted = n.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut twice = 0u64;
    for &x in m {
        let less = sorted.partition_point(|&y| y < x) as u64;
        let not_greater = sorted.partition_point(|&y| y <= x) as u64;
        twice += 2 * less + (not_greater - less);
    }
    Ok((twice, (m.len() * n.len()) as u64))
}

/// Probability that a value drawn from `m` exceeds one drawn from `n`,
/// ties counting half.
pub fn a12(m: &[f64], n: &[f64]) -> Result<f64, StatsError> {
    let (twice, pairs) = a12_counts(m, n)?;
    Ok((twice as f64 / 2.0) / pairs as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for a single value.
fn variance(xs: &[f64], mu: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch-style studentized mean difference `|μm − μn| / se`. A zero standard
/// error gives 0 for equal means and infinity otherwise.
fn studentized(m: &[f64], n: &[f64]) -> f64 {
    let (mm, mn) = (mean(m), mean(n));
    let se = (variance(m, mm) / m.len() as f64 + variance(n, mn) / n.len() as f64).sqrt();
    let diff = (mm - mn).abs();
    if se == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        diff / se
    }
}

/// Two-sample bootstrap test of equal means: both samples are shifted to the
/// pooled mean, resampled `b` times, and the difference is significant when
/// fewer than `alpha · b` resamples reach the observed statistic.
pub fn bootstrap_significant(m: &[f64], n: &[f64], b: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Result<bool, StatsError> {
    if m.is_empty() || n.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let observed = studentized(m, n);
    let pooled = (m.iter().sum::<f64>() + n.iter().sum::<f64>()) / (m.len() + n.len()) as f64;
    let (mm, mn) = (mean(m), mean(n));
    let m0: Vec<f64> = m.iter().map(|x| x - mm + pooled).collect();
    let n0: Vec<f64> = n.iter().map(|x| x - mn + pooled).collect();
    let mut bm = vec![0.0; m.len()];
    let mut bn = vec![0.0; n.len()];
    let mut at_least = 0usize;
    for _ in 0..b {
        for slot in bm.iter_mut() {
            *slot = m0[rng.gen_range(0..m0.len())];
        }
        for slot in bn.iter_mut() {
            *slot = n0[rng.gen_range(0..n0.len())];
        }
        if studentized(&bm, &bn) >= observed {
            at_least += 1;
        }
    }
    Ok((at_least as f64) / (b as f64) < alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    pub name: String,
    pub values: Vec<f64>,
}

impl Treatment {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

/// Split of a sorted treatment list maximizing the between-group delta
/// `E(Δ) = |m|/|l|·(μm − μl)² + |n|/|l|·(μn − μl)²`, sizes and means over
/// pooled values. Returns the prefix length and its delta; the first maximum
/// wins.
pub fn best_split(sorted: &[Treatment]) -> Result<(usize, f64), StatsError> {
    if sorted.len() < 2 {
        return Err(StatsError::TooFewTreatments(2));
    }
    let sizes: Vec<f64> = sorted.iter().map(|t| t.values.len() as f64).collect();
    let sums: Vec<f64> = sorted.iter().map(|t| t.values.iter().sum()).collect();
    let total_size: f64 = sizes.iter().sum();
    let total_mean = sums.iter().sum::<f64>() / total_size;
    let (mut best, mut best_delta) = (1, f64::NEG_INFINITY);
    let (mut size, mut sum) = (0.0, 0.0);
    for k in 1..sorted.len() {
        size += sizes[k - 1];
        sum += sums[k - 1];
        let rest_size = total_size - size;
        let mu_m = sum / size;
        let mu_n = (sums.iter().sum::<f64>() - sum) / rest_size;
        let delta = size / total_size * (mu_m - total_mean).powi(2)
            + rest_size / total_size * (mu_n - total_mean).powi(2);
        if delta > best_delta {
            best = k;
            best_delta = delta;
        }
    }
    Ok((best, best_delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScottKnottConfig {
    pub bootstrap_samples: usize,
    pub alpha: f64,
    pub a12_threshold: f64,
}

impl Default for ScottKnottConfig {
    fn default() -> Self {
        Self { bootstrap_samples: 512, alpha: 0.05, a12_threshold: 0.6 }
    }
}

/// Treatment name → rank, 1 being the group with the highest mean.
pub type RankAssignment = BTreeMap<String, usize>;

/// Recursive ranking: sort by mean (descending, ties by name), cut at the
/// best split, keep the cut only when the two halves differ significantly
/// and by at least a small effect, and recurse into both halves.
pub fn scott_knott(treatments: &[Treatment], config: &ScottKnottConfig, seed: u64) -> Result<RankAssignment, StatsError> {
    if treatments.is_empty() {
        return Err(StatsError::TooFewTreatments(1));
    }
    let mut names = BTreeSet::new();
    for t in treatments {
        if t.values.is_empty() {
            return Err(StatsError::EmptyTreatment(t.name.clone()));
        }
        if !names.insert(t.name.as_str()) {
            return Err(StatsError::DuplicateName(t.name.clone()));
        }
    }
    let mut sorted = treatments.to_vec();
    sorted.sort_by(|a, b| b.mean().total_cmp(&a.mean()).then_with(|| a.name.cmp(&b.name)));
    let mut rng = seed::rng_for(seed, "stats/scott-knott");
    let mut groups = Vec::new();
    divide(&sorted, config, &mut rng, &mut groups)?;
    let mut ranks = RankAssignment::new();
    for (rank, group) in groups.iter().enumerate() {
        for t in *group {
            ranks.insert(t.name.clone(), rank + 1);
        }
    }
    Ok(ranks)
}

fn divide<'a>(
    part: &'a [Treatment],
    config: &ScottKnottConfig,
    rng: &mut ChaCha8Rng,
    groups: &mut Vec<&'a [Treatment]>,
) -> Result<(), StatsError> {
    if part.len() < 2 {
        groups.push(part);
        return Ok(());
    }
    let (k, _) = best_split(part)?;
    let pool = |ts: &[Treatment]| ts.iter().flat_map(|t| t.values.iter().copied()).collect::<Vec<f64>>();
    let (left, right) = (pool(&part[..k]), pool(&part[k..]));
    let significant = bootstrap_significant(&left, &right, config.bootstrap_samples, config.alpha, rng)?;
    let effect = a12(&left, &right)?.max(a12(&right, &left)?);
    if significant && effect >= config.a12_threshold {
        divide(&part[..k], config, rng, groups)?;
        divide(&part[k..], config, rng, groups)
    } else {
        groups.push(part);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_a12(m: &[f64], n: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in m {
            for y in n {
                s += if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
            }
        }
        s / (m.len() * n.len()) as f64
    }

    #[test]
    fn a12_examples() {
        assert_eq!(a12(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        assert_eq!(a12(&[2.0, 3.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(a12(&[1.0, 2.0], &[2.0, 3.0]).unwrap(), 0.125);
        assert_eq!(a12(&[], &[1.0]).unwrap_err(), StatsError::EmptySample);
    }

    #[test]
    fn bootstrap_constant_equal_is_not_significant() {
        let mut rng = seed::rng_for(0, "t");
        assert!(!bootstrap_significant(&[3.0; 5], &[3.0; 7], 512, 0.05, &mut rng).unwrap());
        assert!(bootstrap_significant(&[3.0; 5], &[4.0; 7], 512, 0.05, &mut rng).unwrap());
    }

    #[test]
    fn best_split_examples() {
        let ts = [Treatment::new("m", vec![1.0, 1.0]), Treatment::new("n", vec![5.0, 5.0])];
        assert_eq!(best_split(&ts).unwrap(), (1, 4.0));
        let flat = [Treatment::new("a", vec![2.0]), Treatment::new("b", vec![2.0]), Treatment::new("c", vec![2.0])];
        assert_eq!(best_split(&flat).unwrap().1, 0.0);
        let three =
            [Treatment::new("x", vec![10.0, 10.0]), Treatment::new("y", vec![0.0, 0.0]), Treatment::new("z", vec![0.0, 0.0])];
        assert_eq!(best_split(&three).unwrap().0, 1);
        assert!(best_split(&three[..1]).is_err());
    }

    #[test]
    fn best_split_matches_exhaustive_formula() {
        let ts = [
            Treatment::new("a", vec![9.0, 8.5, 9.2]),
            Treatment::new("b", vec![6.0, 6.1]),
            Treatment::new("c", vec![5.9, 4.0, 5.0, 5.5]),
            Treatment::new("d", vec![1.0]),
        ];
        let all: Vec<f64> = ts.iter().flat_map(|t| t.values.clone()).collect();
        let mu = mean(&all);
        let mut best = (0, f64::NEG_INFINITY);
        for k in 1..ts.len() {
            let m: Vec<f64> = ts[..k].iter().flat_map(|t| t.values.clone()).collect();
            let n: Vec<f64> = ts[k..].iter().flat_map(|t| t.values.clone()).collect();
            let l = all.len() as f64;
            let d = m.len() as f64 / l * (mean(&m) - mu).powi(2) + n.len() as f64 / l * (mean(&n) - mu).powi(2);
            if d > best.1 {
                best = (k, d);
            }
        }
        let got = best_split(&ts).unwrap();
        assert_eq!(got.0, best.0);
        assert!((got.1 - best.1).abs() < 1e-12);
    }

    #[test]
    fn one_treatment_is_rank_one() {
        let r = scott_knott(&[Treatment::new("t", vec![1.0, 2.0])], &ScottKnottConfig::default(), 0).unwrap();
        assert_eq!(r["t"], 1);
    }

    #[test]
    fn clear_separation_ranks_highest_first() {
        let hi: Vec<f64> = (0..20).map(|i| 10.0 + (i % 5) as f64 * 0.1).collect();
        let lo: Vec<f64> = (0..20).map(|i| 1.0 + (i % 5) as f64 * 0.1).collect();
        let mid: Vec<f64> = (0..20).map(|i| 5.0 + (i % 5) as f64 * 0.1).collect();
        let ts = [Treatment::new("lo", lo), Treatment::new("hi", hi), Treatment::new("mid", mid)];
        let r = scott_knott(&ts, &ScottKnottConfig::default(), 1).unwrap();
        assert_eq!((r["hi"], r["mid"], r["lo"]), (1, 2, 3));
    }

    #[test]
    fn identical_treatments_share_a_rank() {
        let v: Vec<f64> = (0..20).map(|i| (i * 37 % 11) as f64).collect();
        let ts = [Treatment::new("a", v.clone()), Treatment::new("b", v)];
        let r = scott_knott(&ts, &ScottKnottConfig::default(), 5).unwrap();
        assert_eq!(r["a"], r["b"]);
    }

    #[test]
    fn invalid_treatments_are_rejected() {
        let cfg = ScottKnottConfig::default();
        assert!(scott_knott(&[], &cfg, 0).is_err());
        assert_eq!(
            scott_knott(&[Treatment::new("a", vec![])], &cfg, 0).unwrap_err(),
            StatsError::EmptyTreatment("a".into())
        );
        let dup = [Treatment::new("a", vec![1.0]), Treatment::new("a", vec![2.0])];
        assert_eq!(scott_knott(&dup, &cfg, 0).unwrap_err(), StatsError::DuplicateName("a".into()));
    }

    fn small_values() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-20i32..20).prop_map(|v| f64::from(v) / 4.0), 1..25)
    }

    proptest! {
        #[test]
        fn a12_matches_brute_force(m in small_values(), n in small_values()) {
            prop_assert_eq!(a12(&m, &n).unwrap(), brute_a12(&m, &n));
            let (a, b) = (a12_counts(&m, &n).unwrap(), a12_counts(&n, &m).unwrap());
            prop_assert_eq!(a.0 + b.0, 2 * a.1);
        }

        #[test]
        fn a12_invariant_under_increasing_transform(m in small_values(), n in small_values()) {
            let f = |v: &Vec<f64>| v.iter().map(|x| (x * 0.3).exp() + 2.0 * x).collect::<Vec<_>>();
            prop_assert_eq!(a12(&m, &n).unwrap(), a12(&f(&m), &f(&n)).unwrap());
        }

        #[test]
        fn ranks_are_contiguous_and_order_free(
            groups in proptest::collection::vec(small_values(), 1..6),
            seed in 0u64..50,
            rot in 0usize..6,
        ) {
            let ts: Vec<Treatment> =
                groups.into_iter().enumerate().map(|(i, v)| Treatment::new(format!("t{i}"), v)).collect();
            let cfg = ScottKnottConfig { bootstrap_samples: 64, ..Default::default() };
            let r = scott_knott(&ts, &cfg, seed).unwrap();
            let used: BTreeSet<usize> = r.values().copied().collect();
            let max = *used.iter().max().unwrap();
            prop_assert_eq!(used, (1..=max).collect::<BTreeSet<_>>());
            let mut rotated = ts.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            rotated.reverse();
            prop_assert_eq!(&scott_knott(&rotated, &cfg, seed).unwrap(), &r);
            // rank 1 holds the highest mean
            let best = ts.iter().min_by(|a, b| b.mean().total_cmp(&a.mean()).then_with(|| a.name.cmp(&b.name))).unwrap();
            prop_assert_eq!(r[&best.name], 1);
        }
    }
}
