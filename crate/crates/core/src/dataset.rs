//! Corpus loading and dataset construction.
//!
//! A corpus directory holds `repos.csv` (`rank,package,owner,name`) and, per
//! repository, the API cache layout of [`crate::ingest`] plus pre-merge
//! snapshots under `snapshots/<sha>/`.

use crate::exclusion::ExclusionRules;
use crate::ingest::{
    default_denylist, fetch_repo_data, fetch_repo_meta, link_tasks, read_candidates, ApiConfig,
    CandidateError, FetchError, LinkedTask, RepoSelection, Transport, DEFAULT_PR_MIN, DEFAULT_STAR_MIN,
};
use crate::par::Parallelism;
use crate::samplegen::{build_task_samples, SampleConfig, SampleKind, TokenCounter, TrainingSample};
use crate::snapshot::{SnapshotError, SnapshotSource};
use crate::task::{TaskContext, TaskError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

pub const CANDIDATES_FILE: &str = "repos.csv";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Candidates(#[from] CandidateError),
    #[error("{repo}: {source}")]
    Fetch {
        repo: String,
        #[source]
        source: FetchError,
    },
    #[error("{task}: {source}")]
    Snapshot {
        task: String,
        #[source]
        source: SnapshotError,
    },
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone)]
pub struct SelectConfig {
    pub star_min: u64,
    pub pr_min: u64,
    pub denylist: BTreeSet<String>,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self { star_min: DEFAULT_STAR_MIN, pr_min: DEFAULT_PR_MIN, denylist: default_denylist() }
    }
}

/// Reads the candidate list under `root` and selects repositories using
/// metadata from the cache (or the network when online).
pub fn select_corpus(
    root: &Path,
    cfg: &SelectConfig,
    api: &ApiConfig,
    transport: &dyn Transport,
) -> Result<RepoSelection, DatasetError> {
    let path = root.join(CANDIDATES_FILE);
    let file = std::fs::File::open(&path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    let mut records = Vec::new();
    for c in read_candidates(file)? {
        let mut rec = fetch_repo_meta(&c.owner, &c.name, api, transport, root)
            .map_err(|source| DatasetError::Fetch { repo: format!("{}/{}", c.owner, c.name), source })?;
        rec.download_rank = Some(c.rank);
        records.push(rec);
    }
    Ok(crate::ingest::select_repos(&records, cfg.star_min, cfg.pr_min, &cfg.denylist))
}

/// Linked tasks of every selected repository, ordered by repository and PR.
pub fn load_tasks(
    root: &Path,
    selection: &RepoSelection,
    api: &ApiConfig,
    transport: &dyn Transport,
) -> Result<Vec<LinkedTask>, DatasetError> {
    let mut tasks = Vec::new();
    for repo in &selection.selected {
        let (prs, issues) = fetch_repo_data(repo, api, transport, root)
            .map_err(|source| DatasetError::Fetch { repo: repo.full_name(), source })?;
        tasks.extend(link_tasks(&prs, &issues, repo));
    }
    tasks.sort_by_key(|t| (t.repo.full_name(), t.pr.number));
    Ok(tasks)
}

pub fn task_context(
    task: &LinkedTask,
    snapshots: &dyn SnapshotSource,
    rules: &ExclusionRules,
) -> Result<TaskContext, DatasetError> {
    let snap = snapshots
        .snapshot(&task.repo, &task.pr.parent_sha)
        .map_err(|source| DatasetError::Snapshot { task: task.task_id(), source })?;
    Ok(TaskContext::build(task.clone(), snap, rules)?)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub tasks_in: usize,
    pub samples_per_kind: BTreeMap<String, usize>,
    /// reason -> kind -> count
    pub drops_per_reason: BTreeMap<String, BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub task_errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub samples: Vec<TrainingSample>,
    pub report: RunReport,
}

/// Builds samples for every task. Tasks are processed independently; the
/// result does not depend on `par`.
pub fn build_dataset(
    tasks: &[LinkedTask],
    snapshots: &dyn SnapshotSource,
    rules: &ExclusionRules,
    cfg: &SampleConfig,
    counter: &dyn TokenCounter,
    par: Parallelism,
) -> BuildOutput {
    let results = par.map(tasks, |t| {
        task_context(t, snapshots, rules).map(|ctx| build_task_samples(&ctx, cfg, counter))
    });
    let mut report = RunReport { tasks_in: tasks.len(), ..Default::default() };
    for k in SampleKind::ALL {
        report.samples_per_kind.insert(k.to_string(), 0);
    }
    let mut samples = Vec::new();
    for res in results {
        match res {
            Ok(ts) => {
                for s in &ts.samples {
                    *report.samples_per_kind.entry(s.kind.to_string()).or_default() += 1;
                }
                for (kind, reason) in ts.skipped {
                    *report
                        .drops_per_reason
                        .entry(reason.to_string())
                        .or_default()
                        .entry(kind.to_string())
                        .or_default() += 1;
                }
                samples.extend(ts.samples);
            }
            Err(e) => {
                log::warn!("{e}");
                report.task_errors.push(e.to_string());
            }
        }
    }
    BuildOutput { samples, report }
}
