use serde::{Deserialize, Serialize};

/// Repository-level statistics used to screen out toy projects.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectStats {
    pub developers: u64,
    pub pull_requests: u64,
    pub issues: u64,
    pub releases: u64,
    pub commits: u64,
    pub duration_years: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SanityReport {
    pub passed: bool,
    pub failed: Vec<&'static str>,
}

/// All six checks are strict lower bounds.
pub fn sanity_check(stats: &ProjectStats) -> SanityReport {
    let checks = [
        ("developers", stats.developers > 7),
        ("pull_requests", stats.pull_requests > 0),
        ("issues", stats.issues > 10),
        ("releases", stats.releases > 1),
        ("commits", stats.commits > 20),
        ("duration_years", stats.duration_years > 1.0),
    ];
    let failed: Vec<&'static str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    SanityReport { passed: failed.is_empty(), failed }
}
