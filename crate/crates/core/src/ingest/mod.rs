//! Repository selection, pull-request scraping and issue linking.

mod fetch;

pub use fetch::{
    fetch_repo_data, fetch_repo_meta, ApiConfig, ApiCache, FetchError, HttpTransport, NoNetwork,
    RateGate, Response, Transport, TOKEN_ENV,
};

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::sync::OnceLock;
use thiserror::Error;

pub const DEFAULT_STAR_MIN: u64 = 1000;
pub const DEFAULT_PR_MIN: u64 = 1000;

/// Repositories whose issues make up common evaluation sets; training on
/// them would leak test instances.
pub const DEFAULT_DENYLIST: &[&str] = &[
    "astropy/astropy",
    "django/django",
    "matplotlib/matplotlib",
    "mwaskom/seaborn",
    "pallets/flask",
    "psf/requests",
    "pydata/xarray",
    "pylint-dev/pylint",
    "pytest-dev/pytest",
    "scikit-learn/scikit-learn",
    "sphinx-doc/sphinx",
    "sympy/sympy",
];

/// SPDX identifiers whose terms allow reuse of the code as training data.
pub const PERMITTED_LICENSES: &[&str] = &[
    "0BSD",
    "AGPL-3.0",
    "Apache-2.0",
    "BSD-2-Clause",
    "BSD-3-Clause",
    "BSL-1.0",
    "CC0-1.0",
    "EPL-2.0",
    "GPL-2.0",
    "GPL-3.0",
    "ISC",
    "LGPL-2.1",
    "LGPL-3.0",
    "MIT",
    "MPL-2.0",
    "PSF-2.0",
    "Python-2.0",
    "Unlicense",
    "Zlib",
];

pub fn license_allows_use(spdx_id: Option<&str>) -> bool {
    spdx_id.is_some_and(|id| PERMITTED_LICENSES.contains(&id))
}

pub fn default_denylist() -> BTreeSet<String> {
    DEFAULT_DENYLIST.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcludedReason {
    Stars,
    PullRequests,
    License,
    Leakage,
}

impl fmt::Display for ExcludedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExcludedReason::Stars => "stars",
            ExcludedReason::PullRequests => "pull_requests",
            ExcludedReason::License => "license",
            ExcludedReason::Leakage => "leakage",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub owner: String,
    pub name: String,
    pub star_count: u64,
    pub pr_count: u64,
    pub default_branch: String,
    pub license_allows_use: bool,
    pub download_rank: Option<u32>,
    pub excluded_reason: Option<ExcludedReason>,
}

impl RepoRecord {
    pub fn new(owner: &str, name: &str) -> Self {
        Self {
            owner: owner.to_string(),
            name: name.to_string(),
            star_count: 0,
            pr_count: 0,
            default_branch: "main".to_string(),
            license_allows_use: false,
            download_rank: None,
            excluded_reason: None,
        }
    }

    /// `owner/name`
    pub fn full_name(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }

    /// `owner__name`, the directory name used by caches and fixtures.
    pub fn slug(&self) -> String {
        format!("{}__{}", self.owner, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRequest {
    pub number: u64,
    pub title: String,
    pub body: String,
    pub merged: bool,
    pub base_ref: String,
    pub merge_commit_sha: String,
    pub parent_sha: String,
    pub commit_messages: Vec<String>,
    pub diff_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub number: u64,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedTask {
    pub repo: RepoRecord,
    pub pr: PullRequest,
    pub issues: Vec<IssueRecord>,
    pub problem_statement: String,
}

impl LinkedTask {
    pub fn issue_numbers(&self) -> Vec<u64> {
        self.issues.iter().map(|i| i.number).collect()
    }

    /// `owner__name-<pr>`
    pub fn task_id(&self) -> String {
        format!("{}-{}", self.repo.slug(), self.pr.number)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RepoSelection {
    pub selected: Vec<RepoRecord>,
    pub rejected: Vec<RepoRecord>,
}

fn rejection(r: &RepoRecord, star_min: u64, pr_min: u64, denylist: &BTreeSet<String>) -> Option<ExcludedReason> {
    if r.star_count < star_min {
        Some(ExcludedReason::Stars)
    } else if r.pr_count < pr_min {
        Some(ExcludedReason::PullRequests)
    } else if !r.license_allows_use {
        Some(ExcludedReason::License)
    } else if denylist.contains(&r.full_name()) {
        Some(ExcludedReason::Leakage)
    } else {
        None
    }
}

/// Splits candidates into selected and rejected records, preserving input
/// order in both lists. Rejected records carry the first failed check, in
/// the order stars, pull requests, license, denylist.
pub fn select_repos(
    candidates: &[RepoRecord],
    star_min: u64,
    pr_min: u64,
    denylist: &BTreeSet<String>,
) -> RepoSelection {
    let mut out = RepoSelection::default();
    for c in candidates {
        let mut r = c.clone();
        r.excluded_reason = rejection(c, star_min, pr_min, denylist);
        if r.excluded_reason.is_some() {
            out.rejected.push(r);
        } else {
            out.selected.push(r);
        }
    }
    out
}

fn issue_ref_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // The keyword forms (`fixes #1`, `closes #2`, ...) end in the same
    // `#<digits>` token, so the bare pattern already covers them.
    RE.get_or_init(|| Regex::new(r"(?:^|[^\p{Alphabetic}\p{Nd}])#(\d+)").expect("valid pattern"))
}

/// Issue numbers mentioned in a PR title and its commit messages, deduplicated
/// in first-occurrence order.
pub fn extract_issue_refs(title: &str, commit_messages: &[String]) -> Vec<u64> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for text in std::iter::once(title).chain(commit_messages.iter().map(String::as_str)) {
        for cap in issue_ref_pattern().captures_iter(text) {
            let Ok(n) = cap[1].parse::<u64>() else { continue };
            if n > 0 && seen.insert(n) {
                out.push(n);
            }
        }
    }
    out
}

pub fn problem_statement(issues: &[IssueRecord]) -> String {
    let mut sorted: Vec<&IssueRecord> = issues.iter().collect();
    sorted.sort_by_key(|i| i.number);
    sorted
        .iter()
        .map(|i| {
            if i.body.trim().is_empty() {
                i.title.clone()
            } else {
                format!("{}\n\n{}", i.title, i.body)
            }
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// One task per merged PR into the default branch that references at least
/// one known issue.
pub fn link_tasks(prs: &[PullRequest], issues: &BTreeMap<u64, IssueRecord>, repo: &RepoRecord) -> Vec<LinkedTask> {
    let mut tasks = Vec::new();
    for pr in prs {
        if !pr.merged || pr.base_ref != repo.default_branch {
            continue;
        }
        let mut linked: Vec<IssueRecord> = extract_issue_refs(&pr.title, &pr.commit_messages)
            .into_iter()
            .filter_map(|n| issues.get(&n).cloned())
            .collect();
        if linked.is_empty() {
            log::debug!("{}#{} references no known issue", repo.full_name(), pr.number);
            continue;
        }
        linked.sort_by_key(|i| i.number);
        tasks.push(LinkedTask {
            repo: repo.clone(),
            pr: pr.clone(),
            problem_statement: problem_statement(&linked),
            issues: linked,
        });
    }
    tasks
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub rank: u32,
    pub package: String,
    pub owner: String,
    pub name: String,
}

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error("candidate csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("candidate csv must have header rank,package,owner,name")]
    BadHeader,
}

/// Reads a `rank,package,owner,name` CSV.
pub fn read_candidates<R: Read>(input: R) -> Result<Vec<Candidate>, CandidateError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["rank", "package", "owner", "name"] {
        return Err(CandidateError::BadHeader);
    }
    reader.deserialize().map(|r| r.map_err(CandidateError::from)).collect()
}

/// Writes repository records as CSV, one row per record.
pub fn write_repo_csv<W: std::io::Write>(out: W, records: &[RepoRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "owner",
        "name",
        "star_count",
        "pr_count",
        "default_branch",
        "license_allows_use",
        "download_rank",
        "excluded_reason",
    ])?;
    for r in records {
        w.write_record([
            r.owner.clone(),
            r.name.clone(),
            r.star_count.to_string(),
            r.pr_count.to_string(),
            r.default_branch.clone(),
            r.license_allows_use.to_string(),
            r.download_rank.map(|d| d.to_string()).unwrap_or_default(),
            r.excluded_reason.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(stars: u64, prs: u64) -> RepoRecord {
        RepoRecord { star_count: stars, pr_count: prs, license_allows_use: true, ..RepoRecord::new("o", "r") }
    }

    #[test]
    fn star_threshold_is_inclusive() {
        let s = select_repos(&[record(999, 5000), record(1000, 1000)], 1000, 1000, &BTreeSet::new());
        assert_eq!(s.rejected.len(), 1);
        assert_eq!(s.rejected[0].excluded_reason, Some(ExcludedReason::Stars));
        assert_eq!(s.selected[0].star_count, 1000);
    }

    #[test]
    fn denylisted_repo_is_leakage() {
        let mut r = record(90000, 9000);
        r.owner = "psf".into();
        r.name = "requests".into();
        let s = select_repos(&[r], 1000, 1000, &default_denylist());
        assert_eq!(s.rejected[0].excluded_reason, Some(ExcludedReason::Leakage));
    }

    #[test]
    fn license_and_pr_reasons() {
        let mut unlicensed = record(5000, 5000);
        unlicensed.license_allows_use = false;
        let s = select_repos(&[record(5000, 10), unlicensed], 1000, 1000, &BTreeSet::new());
        let reasons: Vec<_> = s.rejected.iter().map(|r| r.excluded_reason.unwrap()).collect();
        assert_eq!(reasons, vec![ExcludedReason::PullRequests, ExcludedReason::License]);
    }

    #[test]
    fn license_allowlist() {
        assert!(license_allows_use(Some("MIT")));
        assert!(!license_allows_use(Some("NOASSERTION")));
        assert!(!license_allows_use(None));
    }

    #[test]
    fn issue_ref_examples() {
        assert_eq!(extract_issue_refs("Fixes #123", &[]), vec![123]);
        let msgs = vec!["closes #7 and #7 again".to_string(), "see #9".to_string()];
        assert_eq!(extract_issue_refs("refactor", &msgs), vec![7, 9]);
        assert!(extract_issue_refs("v1.2#3 tag", &[]).is_empty());
        assert!(extract_issue_refs("a#12b", &[]).is_empty());
        assert_eq!(extract_issue_refs("(#4) RESOLVED #5", &[]), vec![4, 5]);
        assert!(extract_issue_refs("#0", &[]).is_empty());
    }

    fn pr(number: u64, title: &str, merged: bool, base: &str) -> PullRequest {
        PullRequest {
            number,
            title: title.into(),
            body: String::new(),
            merged,
            base_ref: base.into(),
            merge_commit_sha: "m".into(),
            parent_sha: "p".into(),
            commit_messages: vec![],
            diff_text: String::new(),
        }
    }

    #[test]
    fn link_examples() {
        let repo = RepoRecord::new("o", "r");
        let issues = BTreeMap::from([(1, IssueRecord { number: 1, title: "T".into(), body: "B".into() })]);
        assert_eq!(link_tasks(&[pr(5, "Fix #1", true, "main")], &issues, &repo).len(), 1);
        assert!(link_tasks(&[pr(5, "Fix #1", false, "main")], &issues, &repo).is_empty());
        assert!(link_tasks(&[pr(5, "Fix #1", true, "dev")], &issues, &repo).is_empty());
        assert!(link_tasks(&[pr(5, "Fix #999", true, "main")], &issues, &repo).is_empty());
    }

    #[test]
    fn statement_orders_issues() {
        let issues = vec![
            IssueRecord { number: 9, title: "Second".into(), body: "".into() },
            IssueRecord { number: 2, title: "First".into(), body: "Body".into() },
        ];
        assert_eq!(problem_statement(&issues), "First\n\nBody\n\nSecond");
    }

    #[test]
    fn candidate_csv() {
        let text = "rank,package,owner,name\n1,textkit,acme,textkit\n";
        let c = read_candidates(text.as_bytes()).unwrap();
        assert_eq!(c[0].owner, "acme");
        assert!(matches!(read_candidates("a,b\n".as_bytes()), Err(CandidateError::BadHeader)));
    }

    proptest! {
        #[test]
        fn refs_monotone_in_messages(title in ".{0,20}", m in proptest::collection::vec("[a-z #0-9]{0,12}", 0..4), extra in "[a-z #0-9]{0,12}") {
            let base = extract_issue_refs(&title, &m);
            let mut more = m.clone();
            more.push(extra);
            let grown = extract_issue_refs(&title, &more);
            prop_assert!(base.iter().all(|n| grown.contains(n)));
        }

        #[test]
        fn selection_idempotent(stars in proptest::collection::vec(0u64..3000, 0..10)) {
            let cands: Vec<_> = stars.iter().map(|&s| record(s, 2000)).collect();
            let once = select_repos(&cands, 1000, 1000, &BTreeSet::new());
            let twice = select_repos(&once.selected, 1000, 1000, &BTreeSet::new());
            prop_assert_eq!(&once.selected, &twice.selected);
            prop_assert!(once.selected.len() <= cands.len());
        }
    }
}
