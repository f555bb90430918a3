//! Evaluation drivers with pluggable predictors.
//!
//! Two driver shapes are provided. The staged driver localizes files, then
//! functions, then lines, then asks for Search/Replace edits, each stage
//! prompted only with what the previous stage predicted. The retrieval
//! driver takes the BM25 top-k files and asks for edits over their full
//! contents; it makes no function or line predictions.

use crate::dataset::task_context;
use crate::editfmt::{apply_edits, parse_edits, EditScript};
use crate::exclusion::ExclusionRules;
use crate::ingest::LinkedTask;
use crate::metrics::{aggregate, score_instance, HitReport, InstanceScore, LocPrediction, MetricsError};
use crate::par::Parallelism;
use crate::retrieval::{Bm25Index, DEFAULT_B, DEFAULT_K1, DEFAULT_TOP_K};
use crate::samplegen::{
    format_functions, format_lines, merge_regions, region_of_line, regions_of_functions, render_numbered,
    render_plain, skeleton_block, templates, Excerpt, Region, SampleKind,
};
use crate::skeleton::{parse_file, FileSkeleton};
use crate::snapshot::SnapshotSource;
use crate::task::TaskContext;
use crate::text::normalize_path;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("predictor transport: {0}")]
    Transport(String),
    #[error("predictor returned status {0}")]
    Status(u16),
    #[error("predictor response malformed: {0}")]
    Malformed(String),
}

/// Answers one prompt of a given kind with free text.
pub trait Predictor: Send + Sync {
    fn predict(&self, kind: SampleKind, prompt: &str) -> Result<String, PredictError>;
}

/// Answers every prompt from a task's gold labels and gold edit script.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    answers: BTreeMap<SampleKind, String>,
}

impl OraclePredictor {
    pub fn for_task(ctx: &TaskContext) -> Self {
        let files: String = ctx.gold.files.iter().map(|f| format!("{f}\n")).collect();
        let answers = BTreeMap::from([
            (SampleKind::FileLoc, files),
            (SampleKind::FuncLoc, format_functions(&ctx.gold.functions)),
            (SampleKind::LineLoc, format_lines(&ctx.gold.lines, &ctx.skeletons)),
            (SampleKind::CodeEdit, ctx.script().render()),
        ]);
        Self { answers }
    }
}

impl Predictor for OraclePredictor {
    fn predict(&self, kind: SampleKind, _prompt: &str) -> Result<String, PredictError> {
        Ok(self.answers.get(&kind).cloned().unwrap_or_default())
    }
}

/// Always answers with empty text.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubPredictor;

impl Predictor for StubPredictor {
    fn predict(&self, _kind: SampleKind, _prompt: &str) -> Result<String, PredictError> {
        Ok(String::new())
    }
}

/// POSTs `{"kind": ..., "prompt": ...}` and reads `{"text": ...}` back.
pub struct HttpPredictor {
    endpoint: String,
    agent: ureq::Agent,
    retries: u32,
}

impl HttpPredictor {
    pub fn new(endpoint: &str, timeout: Duration, retries: u32) -> Self {
        Self { endpoint: endpoint.to_string(), agent: ureq::AgentBuilder::new().timeout(timeout).build(), retries }
    }
}

#[derive(Serialize)]
struct PredictRequest<'a> {
    kind: SampleKind,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct PredictResponse {
    text: String,
}

impl Predictor for HttpPredictor {
    fn predict(&self, kind: SampleKind, prompt: &str) -> Result<String, PredictError> {
        let mut attempt = 0;
        loop {
            let sent = self.agent.post(&self.endpoint).send_json(PredictRequest { kind, prompt });
            let err = match sent {
                Ok(resp) => {
                    let body: PredictResponse =
                        resp.into_json().map_err(|e| PredictError::Malformed(e.to_string()))?;
                    return Ok(body.text);
                }
                Err(ureq::Error::Status(code, _)) if code < 500 && code != 429 => return Err(PredictError::Status(code)),
                Err(ureq::Error::Status(code, _)) => PredictError::Status(code),
                Err(e) => PredictError::Transport(e.to_string()),
            };
            if attempt >= self.retries {
                return Err(err);
            }
            attempt += 1;
            std::thread::sleep(Duration::from_millis(200 * u64::from(attempt)));
        }
    }
}

/// Which predictor answers the prompts of each task.
#[derive(Clone)]
pub enum PredictorChoice {
    Oracle,
    Stub,
    Shared(Arc<dyn Predictor>),
}

impl PredictorChoice {
    fn for_task(&self, ctx: &TaskContext) -> Arc<dyn Predictor> {
        match self {
            PredictorChoice::Oracle => Arc::new(OraclePredictor::for_task(ctx)),
            PredictorChoice::Stub => Arc::new(StubPredictor),
            PredictorChoice::Shared(p) => Arc::clone(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EditOutcome {
    Applied { matches_post_merge: bool },
    NoEdits,
    ParseFailed { reason: String },
    ApplyFailed { reason: String },
    PredictorFailed { reason: String },
}

impl EditOutcome {
    pub fn is_clean(&self) -> bool {
        matches!(self, EditOutcome::Applied { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: SampleKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverOutcome {
    pub prediction: LocPrediction,
    pub func_scored: bool,
    pub line_scored: bool,
    pub script: Option<EditScript>,
    pub edit: EditOutcome,
    pub stage_failures: Vec<StageFailure>,
}

impl DriverOutcome {
    pub fn score(&self, ctx: &TaskContext) -> InstanceScore {
        let mut s = score_instance(&ctx.gold, &self.prediction);
        if !self.func_scored {
            s.func = None;
        }
        if !self.line_scored {
            s.line = None;
        }
        s
    }
}

fn ask(
    predictor: &dyn Predictor,
    kind: SampleKind,
    prompt: &str,
    failures: &mut Vec<StageFailure>,
) -> Option<String> {
    match predictor.predict(kind, prompt) {
        Ok(t) => Some(t),
        Err(e) => {
            failures.push(StageFailure { stage: kind, reason: e.to_string() });
            None
        }
    }
}

fn answer_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty())
}

/// One path per line; paths not in `known` are dropped with a warning.
pub fn parse_file_answer(text: &str, known: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for line in answer_lines(text) {
        let p = normalize_path(line.trim_start_matches("- "));
        if known.contains(&p) {
            out.insert(p);
        } else {
            log::warn!("dropping unknown path {p:?}");
        }
    }
    out
}

/// `path: qualified_name` per line.
pub fn parse_function_answer(text: &str, known: &BTreeSet<String>) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for line in answer_lines(text) {
        let Some((path, name)) = line.split_once(": ") else { continue };
        let path = normalize_path(path);
        let name = name.trim();
        if known.contains(&path) && !name.is_empty() {
            out.insert((path, name.to_string()));
        }
    }
    out
}

/// `(path, qualified_name)`.
pub type FunctionRef = (String, String);
/// `(path, 1-based line)`.
pub type LineRef = (String, usize);

/// `path: name: lines [a, b]` per line. Returns the named functions too.
pub fn parse_line_answer(text: &str, known: &BTreeSet<String>) -> (BTreeSet<FunctionRef>, BTreeSet<LineRef>) {
    let mut functions = BTreeSet::new();
    let mut lines = BTreeSet::new();
    for line in answer_lines(text) {
        let Some((head, nums)) = line.rsplit_once(": lines [") else { continue };
        let Some(nums) = nums.strip_suffix(']') else { continue };
        let Some((path, name)) = head.split_once(": ") else { continue };
        let path = normalize_path(path);
        if !known.contains(&path) {
            continue;
        }
        functions.insert((path.clone(), name.trim().to_string()));
        for n in nums.split(',').filter_map(|n| n.trim().parse::<usize>().ok()) {
            lines.insert((path.clone(), n));
        }
    }
    (functions, lines)
}

fn run_edit_stage(
    ctx: &TaskContext,
    predictor: &dyn Predictor,
    shown: &BTreeMap<String, String>,
    prompt: &str,
    failures: &mut Vec<StageFailure>,
) -> (Option<EditScript>, EditOutcome) {
    let text = match predictor.predict(SampleKind::CodeEdit, prompt) {
        Ok(t) => t,
        Err(e) => {
            failures.push(StageFailure { stage: SampleKind::CodeEdit, reason: e.to_string() });
            return (None, EditOutcome::PredictorFailed { reason: e.to_string() });
        }
    };
    let script = match parse_edits(&text) {
        Ok(s) => s,
        Err(e) => {
            failures.push(StageFailure { stage: SampleKind::CodeEdit, reason: e.to_string() });
            return (None, EditOutcome::ParseFailed { reason: e.to_string() });
        }
    };
    if script.is_empty() {
        return (Some(script), EditOutcome::NoEdits);
    }
    let outcome = match apply_edits(shown, &script) {
        Ok(result) => {
            let matches_post_merge = ctx
                .after
                .iter()
                .all(|(path, post)| result.get(path).is_some_and(|r| r == post));
            EditOutcome::Applied { matches_post_merge }
        }
        Err(e) => EditOutcome::ApplyFailed { reason: e.to_string() },
    };
    (Some(script), outcome)
}

fn skeleton_of<'a>(
    ctx: &'a TaskContext,
    cache: &'a mut BTreeMap<String, Option<FileSkeleton>>,
    path: &str,
) -> Option<&'a FileSkeleton> {
    if let Some(s) = ctx.skeletons.get(path) {
        return Some(s);
    }
    cache
        .entry(path.to_string())
        .or_insert_with(|| ctx.snapshot.get(path).and_then(|src| parse_file(path, src).ok()))
        .as_ref()
}

/// Staged localization followed by editing, each stage fed by the previous
/// stage's predictions.
pub fn run_agentless(ctx: &TaskContext, predictor: &dyn Predictor) -> DriverOutcome {
    let problem = &ctx.task.problem_statement;
    let known: BTreeSet<String> = ctx.tree.file_paths().into_iter().collect();
    let mut failures = Vec::new();
    let mut parsed: BTreeMap<String, Option<FileSkeleton>> = BTreeMap::new();

    // files
    let file_prompt = templates::file_loc(problem, &ctx.tree.render());
    let files = ask(predictor, SampleKind::FileLoc, &file_prompt, &mut failures)
        .map(|t| parse_file_answer(&t, &known))
        .unwrap_or_default();

    // functions
    let skels: Vec<FileSkeleton> = files
        .iter()
        .filter_map(|f| skeleton_of(ctx, &mut parsed, f).cloned())
        .collect();
    let func_prompt = templates::func_loc(problem, &skeleton_block(&skels));
    let functions = ask(predictor, SampleKind::FuncLoc, &func_prompt, &mut failures)
        .map(|t| parse_function_answer(&t, &known))
        .unwrap_or_default();

    // lines
    let mut by_file: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (f, q) in &functions {
        by_file.entry(f).or_default().push(q);
    }
    let mut numbered_regions: BTreeMap<String, Vec<Region>> = BTreeMap::new();
    for (f, names) in &by_file {
        let (Some(src), Some(skel)) = (ctx.snapshot.get(f), skeleton_of(ctx, &mut parsed, f)) else { continue };
        numbered_regions.insert(f.to_string(), regions_of_functions(skel, src, names.iter().copied()));
    }
    let excerpts: Vec<Excerpt> = numbered_regions
        .iter()
        .filter_map(|(f, r)| ctx.snapshot.get(f).map(|src| Excerpt { path: f, source: src, regions: r.clone() }))
        .collect();
    let line_prompt = templates::line_loc(problem, &render_numbered(&excerpts));
    let (_, lines) = ask(predictor, SampleKind::LineLoc, &line_prompt, &mut failures)
        .map(|t| parse_line_answer(&t, &known))
        .unwrap_or_default();

    // edits: localized regions of predicted files; whole files when nothing
    // finer was predicted for them
    let mut edit_regions: BTreeMap<String, Vec<Region>> = numbered_regions;
    for (f, l) in &lines {
        if let Some(skel) = skeleton_of(ctx, &mut parsed, f) {
            edit_regions.entry(f.clone()).or_default().push(region_of_line(skel, *l));
        }
    }
    let mut shown: BTreeMap<String, String> = BTreeMap::new();
    let mut excerpts = Vec::new();
    for f in files.iter().chain(edit_regions.keys()).collect::<BTreeSet<_>>() {
        let Some(src) = ctx.snapshot.get(f) else { continue };
        shown.insert(f.clone(), src.to_string());
        let regions = match edit_regions.get(f) {
            Some(r) if !r.is_empty() => merge_regions(r.clone()),
            _ => vec![(1, src.lines().count())],
        };
        excerpts.push(Excerpt { path: f, source: src, regions });
    }
    let edit_prompt = templates::code_edit(problem, &render_plain(&excerpts));
    let (script, edit) = run_edit_stage(ctx, predictor, &shown, &edit_prompt, &mut failures);

    DriverOutcome {
        prediction: LocPrediction { files, functions, lines },
        func_scored: true,
        line_scored: true,
        script,
        edit,
        stage_failures: failures,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RagParams {
    pub k1: f64,
    pub b: f64,
    pub top_k: usize,
}

impl Default for RagParams {
    fn default() -> Self {
        Self { k1: DEFAULT_K1, b: DEFAULT_B, top_k: DEFAULT_TOP_K }
    }
}

/// BM25 top-k files over the filtered tree, then edits over their full
/// contents. Function and line levels are left unscored.
pub fn run_rag_swe(ctx: &TaskContext, predictor: &dyn Predictor, params: RagParams) -> DriverOutcome {
    let docs = ctx.source_files();
    let retrieved: Vec<String> = match Bm25Index::build(&docs, params.k1, params.b) {
        Ok(idx) => idx.query_top_k(&ctx.task.problem_statement, params.top_k).into_iter().map(|(p, _)| p).collect(),
        Err(e) => {
            log::warn!("{}: {e}", ctx.task.task_id());
            Vec::new()
        }
    };
    let shown: BTreeMap<String, String> = retrieved.iter().map(|p| (p.clone(), docs[p].clone())).collect();
    let excerpts: Vec<Excerpt> = shown
        .iter()
        .map(|(p, src)| Excerpt { path: p, source: src, regions: vec![(1, src.lines().count())] })
        .collect();
    let prompt = templates::code_edit(&ctx.task.problem_statement, &render_plain(&excerpts));
    let mut failures = Vec::new();
    let (script, edit) = run_edit_stage(ctx, predictor, &shown, &prompt, &mut failures);
    DriverOutcome {
        prediction: LocPrediction { files: retrieved.into_iter().collect(), ..Default::default() },
        func_scored: false,
        line_scored: false,
        script,
        edit,
        stage_failures: failures,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driver {
    Agentless,
    RagSwe,
}

/// Per-task result record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub predictions: LocPrediction,
    pub hits: InstanceScore,
    pub edit_status: EditOutcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_failures: Vec<StageFailure>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub results: Vec<TaskResult>,
    pub report: HitReport,
    /// Tasks that could not be set up.
    pub task_errors: Vec<String>,
    /// Tasks left out because their gold file set is empty.
    pub skipped: Vec<String>,
}

pub fn evaluate_task(ctx: &TaskContext, driver: Driver, predictor: &dyn Predictor, rag: RagParams) -> TaskResult {
    let outcome = match driver {
        Driver::Agentless => run_agentless(ctx, predictor),
        Driver::RagSwe => run_rag_swe(ctx, predictor, rag),
    };
    TaskResult {
        task_id: ctx.task.task_id(),
        hits: outcome.score(ctx),
        predictions: outcome.prediction,
        edit_status: outcome.edit,
        stage_failures: outcome.stage_failures,
    }
}

enum Slot {
    Done(Box<TaskResult>),
    Skipped(String),
    Failed(String),
}

/// Runs `driver` on every task and aggregates hit rates.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    tasks: &[LinkedTask],
    snapshots: &dyn SnapshotSource,
    rules: &ExclusionRules,
    driver: Driver,
    predictor: &PredictorChoice,
    rag: RagParams,
    par: Parallelism,
) -> Result<Evaluation, EvalError> {
    let slots = par.map(tasks, |t| match task_context(t, snapshots, rules) {
        Err(e) => Slot::Failed(e.to_string()),
        Ok(ctx) if ctx.gold.files.is_empty() => Slot::Skipped(ctx.task.task_id()),
        Ok(ctx) => {
            let p = predictor.for_task(&ctx);
            Slot::Done(Box::new(evaluate_task(&ctx, driver, p.as_ref(), rag)))
        }
    });
    let mut results = Vec::new();
    let mut task_errors = Vec::new();
    let mut skipped = Vec::new();
    for s in slots {
        match s {
            Slot::Done(r) => results.push(*r),
            Slot::Skipped(id) => skipped.push(id),
            Slot::Failed(e) => task_errors.push(e),
        }
    }
    let scores: Vec<InstanceScore> = results.iter().map(|r| r.hits).collect();
    let report = aggregate(&scores)?;
    Ok(Evaluation { results, report, task_errors, skipped })
}
