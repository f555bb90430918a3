use crate::config::{ConfigError, RunConfig};
use anyhow::{bail, Context, Result};
use resat_core::dataset::{build_dataset, load_tasks, select_corpus, SelectConfig};
use resat_core::editfmt::{apply_edits, parse_edits, to_unified_diff};
use resat_core::ingest::{
    default_denylist, write_repo_csv, ApiConfig, HttpTransport, NoNetwork, RepoSelection, Transport,
};
use resat_core::pipeline::{evaluate, Driver, HttpPredictor, PredictorChoice, RagParams};
use resat_core::repostruct::build_tree;
use resat_core::retrieval::Bm25Index;
use resat_core::samplegen::{write_jsonl, ApproxCounter, SampleConfig, SampleKind, TrainingSample};
use resat_core::snapshot::CorpusSnapshots;
use resat_core::ExclusionRules;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Duration;

/// What a command reports back to `main` besides errors.
#[derive(Debug, Default)]
pub struct Outcome {
    pub task_errors: Vec<String>,
}

fn select_config(cfg: &RunConfig, denylist: Option<&Path>) -> Result<SelectConfig> {
    let denylist = match denylist {
        None => default_denylist(),
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("reading denylist {}", p.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
    };
    Ok(SelectConfig { star_min: cfg.star_min, pr_min: cfg.pr_min, denylist })
}

fn offline_api() -> ApiConfig {
    ApiConfig { offline: true, ..ApiConfig::default() }
}

/// Writes `bytes` to `path`, or to standard output when `path` is None.
fn write_or_print(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn log_selection(sel: &RepoSelection) {
    for r in &sel.rejected {
        let reason = r.excluded_reason.map(|x| x.to_string()).unwrap_or_default();
        log::info!("rejected {} ({reason})", r.full_name());
    }
    log::info!("{} repositories selected, {} rejected", sel.selected.len(), sel.rejected.len());
}

pub fn select(cfg: &RunConfig, denylist: Option<&Path>) -> Result<Outcome> {
    let root = cfg.corpus_root()?;
    let sel = select_corpus(root, &select_config(cfg, denylist)?, &offline_api(), &NoNetwork)
        .context("selecting repositories from cached metadata (run `scrape` first)")?;
    log_selection(&sel);
    let mut buf = Vec::new();
    write_repo_csv(&mut buf, &sel.selected)?;
    write_or_print(cfg.out.as_deref(), &buf)?;
    Ok(Outcome::default())
}

pub fn scrape(cfg: &RunConfig, denylist: Option<&Path>, clone: bool) -> Result<Outcome> {
    let root = cfg.cache_root()?;
    let api = ApiConfig { offline: cfg.offline, ..ApiConfig::default() };
    let http;
    let transport: &dyn Transport = if cfg.offline {
        &NoNetwork
    } else {
        http = HttpTransport::from_env();
        &http
    };
    let sel = select_corpus(root, &select_config(cfg, denylist)?, &api, transport)?;
    log_selection(&sel);
    let mut outcome = Outcome::default();
    for repo in &sel.selected {
        let one = RepoSelection { selected: vec![repo.clone()], rejected: Vec::new() };
        match load_tasks(root, &one, &api, transport) {
            Ok(tasks) => println!("{}\t{} tasks", repo.full_name(), tasks.len()),
            Err(e) => {
                log::warn!("{e}");
                outcome.task_errors.push(e.to_string());
                continue;
            }
        }
        if clone && !cfg.offline {
            if let Err(e) = clone_or_fetch(root, &repo.slug(), &repo.full_name()) {
                log::warn!("{}: {e:#}", repo.full_name());
                outcome.task_errors.push(format!("{}: {e:#}", repo.full_name()));
            }
        }
    }
    Ok(outcome)
}

fn clone_or_fetch(root: &Path, slug: &str, full_name: &str) -> Result<()> {
    let dest = root.join(slug).join("clone");
    let status = if dest.join(".git").exists() || dest.join("HEAD").exists() {
        Command::new("git").arg("-C").arg(&dest).args(["fetch", "--quiet", "origin"]).status()
    } else {
        Command::new("git")
            .args(["clone", "--quiet", "--no-checkout"])
            .arg(format!("https://github.com/{full_name}.git"))
            .arg(&dest)
            .status()
    }
    .context("running git")?;
    if !status.success() {
        bail!("git exited with {status}");
    }
    Ok(())
}

pub fn build(cfg: &RunConfig, report_path: Option<&Path>, denylist: Option<&Path>) -> Result<Outcome> {
    let root = cfg.corpus_root()?;
    let out = cfg.out_path()?;
    let api = offline_api();
    let sel = select_corpus(root, &select_config(cfg, denylist)?, &api, &NoNetwork)?;
    log_selection(&sel);
    let tasks = load_tasks(root, &sel, &api, &NoNetwork)?;
    let sample_cfg = SampleConfig {
        token_budget: cfg.token_budget,
        distractor_count: cfg.distractor_count,
        seed: cfg.seed,
    };
    let built = build_dataset(
        &tasks,
        &CorpusSnapshots::new(root),
        &ExclusionRules::default(),
        &sample_cfg,
        &ApproxCounter,
        cfg.parallelism(),
    );
    let mut samples = built.samples;
    for s in &mut samples {
        cfg.chat_template.apply(s);
    }
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let n = write_jsonl(BufWriter::new(file), &samples)?;
    log::info!("wrote {n} samples to {}", out.display());
    write_or_print(report_path, &json_bytes(&built.report)?)?;
    Ok(Outcome { task_errors: built.report.task_errors })
}

#[derive(Serialize)]
struct EvalReport<'a> {
    driver: Driver,
    hits: &'a resat_core::metrics::HitReport,
    clean_edits: usize,
    skipped: &'a [String],
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    task_errors: &'a [String],
}

/// Connection settings for `--predictor http`.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub url: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
}

pub fn eval(
    cfg: &RunConfig,
    driver: Driver,
    predictor: PredictorKind,
    endpoint: &Endpoint,
    report_path: Option<&Path>,
) -> Result<Outcome> {
    let root = cfg.corpus_root()?;
    let choice = match predictor {
        PredictorKind::Oracle => PredictorChoice::Oracle,
        PredictorKind::Stub => PredictorChoice::Stub,
        PredictorKind::Http => {
            let url = endpoint.url.as_deref().ok_or_else(|| ConfigError("--endpoint is required with --predictor http".into()))?;
            if endpoint.timeout_secs == 0 {
                return Err(ConfigError("--endpoint-timeout must be positive".into()).into());
            }
            let timeout = Duration::from_secs(endpoint.timeout_secs);
            PredictorChoice::Shared(Arc::new(HttpPredictor::new(url, timeout, endpoint.retries)))
        }
    };
    let api = offline_api();
    let sel = select_corpus(root, &select_config(cfg, None)?, &api, &NoNetwork)?;
    let tasks = load_tasks(root, &sel, &api, &NoNetwork)?;
    let rag = RagParams { k1: cfg.k1, b: cfg.b, top_k: cfg.top_k };
    let ev = evaluate(
        &tasks,
        &CorpusSnapshots::new(root),
        &ExclusionRules::default(),
        driver,
        &choice,
        rag,
        cfg.parallelism(),
    )?;

    let mut task_errors = ev.task_errors.clone();
    for r in &ev.results {
        if let resat_core::pipeline::EditOutcome::PredictorFailed { reason } = &r.edit_status {
            task_errors.push(format!("{}: {reason}", r.task_id));
        }
    }
    if let Some(out) = cfg.out.as_deref() {
        let mut w = BufWriter::new(fs::File::create(out).with_context(|| format!("creating {}", out.display()))?);
        for r in &ev.results {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    let report = EvalReport {
        driver,
        hits: &ev.report,
        clean_edits: ev.results.iter().filter(|r| r.edit_status.is_clean()).count(),
        skipped: &ev.skipped,
        task_errors: &ev.task_errors,
    };
    write_or_print(report_path, &json_bytes(&report)?)?;
    Ok(Outcome { task_errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PredictorKind {
    Oracle,
    Stub,
    Http,
}

pub fn apply(edits: &Path, root: &Path, emit_diff: bool) -> Result<Outcome> {
    let text = fs::read_to_string(edits).with_context(|| format!("reading {}", edits.display()))?;
    let script = parse_edits(&text).with_context(|| format!("parsing {}", edits.display()))?;
    let mut before = BTreeMap::new();
    for path in script.paths() {
        let full = root.join(path);
        let body = match fs::read_to_string(&full) {
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            r => r.with_context(|| format!("reading {}", full.display()))?,
        };
        before.insert(path.to_string(), body);
    }
    let after = apply_edits(&before, &script)?;
    if emit_diff {
        write_or_print(None, to_unified_diff(&before, &after, 3).as_bytes())?;
    } else {
        for (path, body) in &after {
            if before.get(path) != Some(body) {
                let full = root.join(path);
                if let Some(dir) = full.parent() {
                    fs::create_dir_all(dir)?;
                }
                fs::write(full, body)?;
                log::info!("patched {path}");
            }
        }
    }
    Ok(Outcome::default())
}

pub fn retrieve(cfg: &RunConfig, root: &Path, query: &str) -> Result<Outcome> {
    let rules = ExclusionRules::default();
    let tree = build_tree(root, &rules)?;
    let mut docs = BTreeMap::new();
    for path in tree.file_paths() {
        let body = fs::read(root.join(&path)).with_context(|| format!("reading {path}"))?;
        docs.insert(path, String::from_utf8_lossy(&body).into_owned());
    }
    let index = Bm25Index::build(&docs, cfg.k1, cfg.b)?;
    let mut listing = String::new();
    for (rank, (path, score)) in index.query_top_k(query, cfg.top_k).into_iter().enumerate() {
        listing.push_str(&format!("{}\t{score:.6}\t{path}\n", rank + 1));
    }
    write_or_print(cfg.out.as_deref(), listing.as_bytes())?;
    Ok(Outcome::default())
}

/// Upper bounds of the token-count histogram buckets.
const TOKEN_BUCKETS: [usize; 8] = [256, 512, 1024, 2048, 4096, 8192, 16384, 32768];

#[derive(Debug, Default, Serialize)]
struct KindStats {
    samples: usize,
    min_tokens: usize,
    max_tokens: usize,
    mean_tokens: f64,
    /// `<=bound` -> count, with one `>32768` overflow bucket.
    token_histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Default, Serialize)]
struct DatasetStats {
    samples: usize,
    repos: BTreeMap<String, usize>,
    kinds: BTreeMap<String, KindStats>,
}

fn bucket_label(tokens: usize) -> String {
    TOKEN_BUCKETS
        .iter()
        .find(|&&b| tokens <= b)
        .map(|b| format!("<={b:05}"))
        .unwrap_or_else(|| format!(">{}", TOKEN_BUCKETS[TOKEN_BUCKETS.len() - 1]))
}

pub fn stats(cfg: &RunConfig, dataset: &Path) -> Result<Outcome> {
    let file = fs::File::open(dataset).with_context(|| format!("opening {}", dataset.display()))?;
    let mut per_kind: BTreeMap<SampleKind, Vec<usize>> = BTreeMap::new();
    let mut stats = DatasetStats::default();
    let mut prs: BTreeSet<(String, u64)> = BTreeSet::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: TrainingSample =
            serde_json::from_str(&line).with_context(|| format!("{}:{}", dataset.display(), i + 1))?;
        per_kind.entry(s.kind).or_default().push(s.meta.token_count);
        *stats.repos.entry(s.meta.repo.clone()).or_default() += 1;
        prs.insert((s.meta.repo, s.meta.pr_number));
        stats.samples += 1;
    }
    for (kind, counts) in per_kind {
        let mut ks = KindStats {
            samples: counts.len(),
            min_tokens: counts.iter().copied().min().unwrap_or(0),
            max_tokens: counts.iter().copied().max().unwrap_or(0),
            mean_tokens: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
            ..Default::default()
        };
        for c in counts {
            *ks.token_histogram.entry(bucket_label(c)).or_default() += 1;
        }
        stats.kinds.insert(kind.to_string(), ks);
    }
    log::info!("{} samples from {} pull requests", stats.samples, prs.len());
    write_or_print(cfg.out.as_deref(), &json_bytes(&stats)?)?;
    Ok(Outcome::default())
}

pub fn read_query(query: Option<String>, query_file: Option<PathBuf>) -> Result<String> {
    match (query, query_file) {
        (Some(q), None) => Ok(q),
        (None, Some(p)) => fs::read_to_string(&p).with_context(|| format!("reading {}", p.display())),
        _ => Err(ConfigError("exactly one of --query or --query-file is required".into()).into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_labels_sort_by_bound() {
        assert_eq!(bucket_label(1), "<=00256");
        assert_eq!(bucket_label(256), "<=00256");
        assert_eq!(bucket_label(257), "<=00512");
        assert_eq!(bucket_label(40000), ">32768");
        let mut labels: Vec<String> = [3000, 10, 600].iter().map(|&t| bucket_label(t)).collect();
        labels.sort();
        assert_eq!(labels, ["<=00256", "<=01024", "<=04096"]);
    }
}
