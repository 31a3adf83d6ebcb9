//! Labelling cost arithmetic for manual versus assisted labelling.
//!
//! Reading time per project is `seconds_per_commit × commits_to_read ×
//! readers / 3600`. The "adjusted" tier multiplies by the cull and overhead
//! multipliers (2 × 2 by default), and the total tier multiplies by the
//! number of projects. Money at each tier is hours × wage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid cost assumption: {0}")]
pub struct CostError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Manual,
    Emblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAssumptions {
    pub seconds_per_commit: f64,
    pub commits_to_read: u64,
    pub wage_per_hour: f64,
    pub readers_per_commit: u32,
    pub cull_multiplier: f64,
    pub overhead_multiplier: f64,
    pub projects: u64,
}

impl CostAssumptions {
    /// 7 s per commit, every one of 5000 commits read.
    pub fn manual() -> Self {
        Self {
            seconds_per_commit: 7.0,
            commits_to_read: 5000,
            wage_per_hour: 8.25,
            readers_per_commit: 2,
            cull_multiplier: 2.0,
            overhead_multiplier: 2.0,
            projects: 500,
        }
    }

    /// 4 s per commit, 1100 commits (22% of 5000) read.
    pub fn emblem() -> Self {
        Self { seconds_per_commit: 4.0, commits_to_read: 1100, ..Self::manual() }
    }

    pub fn for_method(method: Method) -> Self {
        match method {
            Method::Manual => Self::manual(),
            Method::Emblem => Self::emblem(),
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CostError(format!("{name} must be positive, got {v}")))
            }
        };
        positive("seconds_per_commit", self.seconds_per_commit)?;
        positive("commits_to_read", self.commits_to_read as f64)?;
        positive("wage_per_hour", self.wage_per_hour)?;
        positive("readers_per_commit", f64::from(self.readers_per_commit))?;
        positive("cull_multiplier", self.cull_multiplier)?;
        positive("overhead_multiplier", self.overhead_multiplier)?;
        positive("projects", self.projects as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub commits_per_hour: f64,
    pub hours_per_project: f64,
    pub hours_per_project_adjusted: f64,
    pub hours_total: f64,
    pub money_per_project: f64,
    pub money_per_project_adjusted: f64,
    pub money_total: f64,
    pub projects: u64,
}

pub fn estimate_cost(a: &CostAssumptions) -> Result<CostReport, CostError> {
    a.validate()?;
    let hours = a.seconds_per_commit * a.commits_to_read as f64 * f64::from(a.readers_per_commit) / 3600.0;
    let adjusted = hours * a.cull_multiplier * a.overhead_multiplier;
    let total = adjusted * a.projects as f64;
    Ok(CostReport {
        commits_per_hour: 3600.0 / a.seconds_per_commit,
        hours_per_project: hours,
        hours_per_project_adjusted: adjusted,
        hours_total: total,
        money_per_project: hours * a.wage_per_hour,
        money_per_project_adjusted: adjusted * a.wage_per_hour,
        money_total: total * a.wage_per_hour,
        projects: a.projects,
    })
}

impl CostReport {
    /// Plain-text rendering with the row names of the published cost tables.
    /// With a single project the total rows are omitted.
    pub fn render(&self, a: &CostAssumptions) -> String {
        let mut rows = vec![
            ("time per commit".to_string(), format!("{} secs", fmt_num(a.seconds_per_commit, 2))),
            ("commits need to read".to_string(), a.commits_to_read.to_string()),
            ("time per project".to_string(), format!("{} hrs", fmt_num(self.hours_per_project, 2))),
            (
                "time per project (adjusted)".to_string(),
                format!("{} hrs", fmt_num(self.hours_per_project_adjusted, 2)),
            ),
        ];
        if self.projects > 1 {
            rows.push((format!("time for {} projects", self.projects), format!("{} hrs", fmt_num(self.hours_total, 0))));
        }
        rows.push(("commits per hour".to_string(), format!("{}", self.commits_per_hour.floor())));
        rows.push(("money per project".to_string(), format!("${}", fmt_num(self.money_per_project, 2))));
        rows.push((
            "money per project (adjusted)".to_string(),
            format!("${}", fmt_num(self.money_per_project_adjusted, 2)),
        ));
        if self.projects > 1 {
            rows.push((format!("money for {} projects", self.projects), format!("${}", fmt_num(self.money_total, 0))));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }
}

/// Fixed-point with thousands separators.
fn fmt_num(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i.to_string(), Some(f.to_string())),
        None => (s.clone(), None),
    };
    let (sign, digits) = int.strip_prefix('-').map_or(("", int.as_str()), |d| ("-", d));
    let mut grouped = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}
