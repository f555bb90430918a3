//! Everything derived from one linked task that sample construction and
//! evaluation both need.

use crate::diffmap::{
    apply_file_diff, gold_files, gold_labels, parse_unified_diff, DiffError, FileDiff, FileStatus,
    GoldLocalization,
};
use crate::editfmt::{plan_edits, EditScript, PlannedEdit};
use crate::exclusion::ExclusionRules;
use crate::ingest::LinkedTask;
use crate::repostruct::RepoTree;
use crate::skeleton::{parse_file, FileSkeleton, SyntaxError};
use crate::snapshot::Snapshot;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{task}: {source}")]
    Diff {
        task: String,
        #[source]
        source: DiffError,
    },
    #[error("{task}: diff touches {path}, which is not in the snapshot")]
    MissingFile { task: String, path: String },
}

#[derive(Debug, Clone)]
pub struct TaskContext {
    pub task: LinkedTask,
    pub snapshot: Snapshot,
    pub diffs: Vec<FileDiff>,
    pub tree: RepoTree,
    /// Pre-edit skeletons of the gold files that parse.
    pub skeletons: BTreeMap<String, FileSkeleton>,
    /// Gold files that do not parse.
    pub broken: BTreeMap<String, SyntaxError>,
    /// Function and line levels are empty when any gold file is broken.
    pub gold: GoldLocalization,
    /// Pre-edit contents of the gold files.
    pub before: BTreeMap<String, String>,
    /// Post-merge contents of the gold files, keyed by pre-edit path. A
    /// deleted file maps to the empty string.
    pub after: BTreeMap<String, String>,
    pub planned: Vec<PlannedEdit>,
}

impl TaskContext {
    pub fn build(task: LinkedTask, snapshot: Snapshot, rules: &ExclusionRules) -> Result<Self, TaskError> {
        let id = task.task_id();
        let diffs = parse_unified_diff(&task.pr.diff_text).map_err(|source| TaskError::Diff { task: id.clone(), source })?;
        let tree = RepoTree::from_paths(&task.repo.name, snapshot.paths(), rules);
        let files = gold_files(&diffs, rules);

        let mut skeletons = BTreeMap::new();
        let mut broken = BTreeMap::new();
        let mut before = BTreeMap::new();
        let mut after = BTreeMap::new();
        for d in diffs.iter().filter(|d| d.status != FileStatus::Added && files.contains(d.path())) {
            let path = d.path().to_string();
            let src = snapshot
                .get(&path)
                .ok_or_else(|| TaskError::MissingFile { task: id.clone(), path: path.clone() })?;
            let post = apply_file_diff(src, d).map_err(|source| TaskError::Diff { task: id.clone(), source })?;
            match parse_file(&path, src) {
                Ok(s) => {
                    skeletons.insert(path.clone(), s);
                }
                Err(e) => {
                    log::debug!("{id}: {e}");
                    broken.insert(path.clone(), e);
                }
            }
            before.insert(path.clone(), src.to_string());
            after.insert(path, post);
        }

        let gold = if broken.is_empty() {
            gold_labels(&diffs, &skeletons, rules).map_err(|source| TaskError::Diff { task: id.clone(), source })?
        } else {
            GoldLocalization { files, ..Default::default() }
        };
        let planned = plan_edits(&before, &after);
        Ok(Self { task, snapshot, diffs, tree, skeletons, broken, gold, before, after, planned })
    }

    pub fn script(&self) -> EditScript {
        EditScript { edits: self.planned.iter().map(|p| p.edit.clone()).collect() }
    }

    /// Files the tree lists, i.e. admitted source files of the snapshot.
    pub fn source_files(&self) -> BTreeMap<String, String> {
        self.tree
            .file_paths()
            .into_iter()
            .filter_map(|p| self.snapshot.get(&p).map(|t| (p.clone(), t.to_string())))
            .collect()
    }
}
