#![allow(dead_code)]

use resat_core::dataset::{load_tasks, select_corpus, SelectConfig};
use resat_core::ingest::{ApiConfig, LinkedTask, NoNetwork, RepoSelection};
use resat_core::snapshot::DirSnapshots;
use std::path::PathBuf;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn toy_root() -> PathBuf {
    fixtures().join("toy")
}

pub fn offline() -> ApiConfig {
    ApiConfig { offline: true, ..ApiConfig::default() }
}

pub fn toy_selection() -> RepoSelection {
    select_corpus(&toy_root(), &SelectConfig::default(), &offline(), &NoNetwork).expect("toy selection")
}

pub fn toy_tasks() -> Vec<LinkedTask> {
    load_tasks(&toy_root(), &toy_selection(), &offline(), &NoNetwork).expect("toy tasks")
}

pub fn toy_snapshots() -> DirSnapshots {
    DirSnapshots::new(toy_root())
}
