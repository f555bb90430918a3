//! Localization hit rates at file, function and line granularity.
//!
//! Recall is precision-blind: extra predictions never lower a score.
//! Aggregates are reported two ways side by side: the share of instances
//! with every gold item found, and the pooled share of gold items found.

use crate::diffmap::GoldLocalization;
use crate::text::normalize_path;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocPrediction {
    pub files: BTreeSet<String>,
    pub functions: BTreeSet<(String, String)>,
    pub lines: BTreeSet<(String, usize)>,
}

impl LocPrediction {
    pub fn from_gold(g: &GoldLocalization) -> Self {
        Self { files: g.files.clone(), functions: g.functions.clone(), lines: g.lines.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelScore {
    pub gold: usize,
    pub hits: usize,
    pub recall: f64,
    pub full_hit: bool,
}

impl LevelScore {
    fn new(gold: usize, hits: usize) -> Self {
        Self { gold, hits, recall: hits as f64 / gold as f64, full_hit: hits == gold }
    }
}

/// Per-instance scores; a level is `None` when its gold set is empty or
/// the level was not scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub file: Option<LevelScore>,
    pub func: Option<LevelScore>,
    pub line: Option<LevelScore>,
}

fn level<T: Ord + Clone>(gold: &BTreeSet<T>, pred: &BTreeSet<T>) -> Option<LevelScore> {
    if gold.is_empty() {
        return None;
    }
    Some(LevelScore::new(gold.len(), gold.intersection(pred).count()))
}

/// Scores one prediction against gold at all three levels.
pub fn score_instance(gold: &GoldLocalization, pred: &LocPrediction) -> InstanceScore {
    let norm_files = |s: &BTreeSet<String>| s.iter().map(|p| normalize_path(p)).collect::<BTreeSet<_>>();
    let norm_fns = |s: &BTreeSet<(String, String)>| {
        s.iter().map(|(p, f)| (normalize_path(p), f.clone())).collect::<BTreeSet<_>>()
    };
    let norm_lines = |s: &BTreeSet<(String, usize)>| {
        s.iter().map(|(p, l)| (normalize_path(p), *l)).collect::<BTreeSet<_>>()
    };
    InstanceScore {
        file: level(&norm_files(&gold.files), &norm_files(&pred.files)),
        func: level(&norm_fns(&gold.functions), &norm_fns(&pred.functions)),
        line: level(&norm_lines(&gold.lines), &norm_lines(&pred.lines)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelAggregate {
    /// Instances with a non-empty gold set at this level.
    pub instances: usize,
    pub full_hits: usize,
    pub gold_items: usize,
    pub hit_items: usize,
    /// Percentage of instances with every gold item predicted.
    pub instance_pct: f64,
    /// Percentage of all gold items predicted, pooled across instances.
    pub micro_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitReport {
    pub instances: usize,
    pub file: Option<LevelAggregate>,
    pub func: Option<LevelAggregate>,
    pub line: Option<LevelAggregate>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no instances to aggregate")]
    EmptyEvaluation,
}

fn aggregate_level<'a>(scores: impl Iterator<Item = &'a LevelScore>) -> Option<LevelAggregate> {
    let (mut n, mut full, mut gold, mut hits) = (0, 0, 0, 0);
    for s in scores {
        n += 1;
        full += usize::from(s.full_hit);
        gold += s.gold;
        hits += s.hits;
    }
    (n > 0).then(|| LevelAggregate {
        instances: n,
        full_hits: full,
        gold_items: gold,
        hit_items: hits,
        instance_pct: 100.0 * full as f64 / n as f64,
        micro_pct: 100.0 * hits as f64 / gold as f64,
    })
}

pub fn aggregate(instances: &[InstanceScore]) -> Result<HitReport, MetricsError> {
    if instances.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }
    Ok(HitReport {
        instances: instances.len(),
        file: aggregate_level(instances.iter().filter_map(|i| i.file.as_ref())),
        func: aggregate_level(instances.iter().filter_map(|i| i.func.as_ref())),
        line: aggregate_level(instances.iter().filter_map(|i| i.line.as_ref())),
    })
}
