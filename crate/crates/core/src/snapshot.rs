//! Pre-merge repository snapshots as in-memory file maps.

use crate::ingest::RepoRecord;
use crate::repostruct::relative_files;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot {0} not found")]
    NotFound(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("git failed: {0}")]
    Git(String),
}

/// Text contents of a repository at one commit, keyed by relative path.
/// Files that are not valid UTF-8 are left out.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub files: BTreeMap<String, String>,
}

impl Snapshot {
    pub fn from_dir(root: &Path) -> Result<Self, SnapshotError> {
        if !root.is_dir() {
            return Err(SnapshotError::NotFound(root.display().to_string()));
        }
        let mut files = BTreeMap::new();
        for rel in relative_files(root) {
            let full = root.join(&rel);
            let bytes = std::fs::read(&full).map_err(|source| SnapshotError::Io {
                path: full.display().to_string(),
                source,
            })?;
            if let Ok(text) = String::from_utf8(bytes) {
                files.insert(rel, text);
            }
        }
        Ok(Snapshot { files })
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }
}

/// Where snapshots for a repository commit come from.
pub trait SnapshotSource: Sync {
    fn snapshot(&self, repo: &RepoRecord, sha: &str) -> Result<Snapshot, SnapshotError>;
}

/// Fixture layout: `<root>/<owner>__<name>/snapshots/<sha>/`.
#[derive(Debug, Clone)]
pub struct DirSnapshots {
    pub root: PathBuf,
}

impl DirSnapshots {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl SnapshotSource for DirSnapshots {
    fn snapshot(&self, repo: &RepoRecord, sha: &str) -> Result<Snapshot, SnapshotError> {
        Snapshot::from_dir(&self.root.join(repo.slug()).join("snapshots").join(sha))
    }
}

/// Reads snapshots out of local clones at `<root>/<owner>__<name>/clone`
/// with the `git` executable. Only files with `extension` are loaded.
#[derive(Debug, Clone)]
pub struct GitSnapshots {
    pub root: PathBuf,
    pub extension: String,
}

impl GitSnapshots {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), extension: ".py".into() }
    }

    fn git(&self, repo_dir: &Path, args: &[&str]) -> Result<Vec<u8>, SnapshotError> {
        let out = Command::new("git")
            .arg("-C")
            .arg(repo_dir)
            .args(args)
            .output()
            .map_err(|e| SnapshotError::Git(e.to_string()))?;
        if !out.status.success() {
            return Err(SnapshotError::Git(String::from_utf8_lossy(&out.stderr).into_owned()));
        }
        Ok(out.stdout)
    }
}

impl SnapshotSource for GitSnapshots {
    fn snapshot(&self, repo: &RepoRecord, sha: &str) -> Result<Snapshot, SnapshotError> {
        let dir = self.root.join(repo.slug()).join("clone");
        if !dir.is_dir() {
            return Err(SnapshotError::NotFound(dir.display().to_string()));
        }
        let listing = self.git(&dir, &["ls-tree", "-r", "-z", "--name-only", sha])?;
        let mut files = BTreeMap::new();
        for raw in listing.split(|b| *b == 0).filter(|s| !s.is_empty()) {
            let path = String::from_utf8_lossy(raw).into_owned();
            if !path.ends_with(&self.extension) {
                continue;
            }
            let blob = self.git(&dir, &["show", &format!("{sha}:{path}")])?;
            if let Ok(text) = String::from_utf8(blob) {
                files.insert(path, text);
            }
        }
        Ok(Snapshot { files })
    }
}

/// Snapshot directories when present, local clones otherwise.
#[derive(Debug, Clone)]
pub struct CorpusSnapshots {
    pub dirs: DirSnapshots,
    pub git: GitSnapshots,
}

impl CorpusSnapshots {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        Self { dirs: DirSnapshots::new(root.clone()), git: GitSnapshots::new(root) }
    }
}

impl SnapshotSource for CorpusSnapshots {
    fn snapshot(&self, repo: &RepoRecord, sha: &str) -> Result<Snapshot, SnapshotError> {
        match self.dirs.snapshot(repo, sha) {
            Err(SnapshotError::NotFound(_)) => self.git.snapshot(repo, sha),
            other => other,
        }
    }
}
