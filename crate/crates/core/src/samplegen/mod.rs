//! Training samples for file, function and line localization and for code
//! editing, plus JSONL output.

pub mod templates;
pub mod tokens;

pub use tokens::{ApproxCounter, TokenCounter};

use crate::skeleton::{render_skeleton, DeclKind, FileSkeleton};
use crate::task::TaskContext;
use crate::text::split_lines;
use crate::MODULE_LEVEL;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

pub const DEFAULT_TOKEN_BUDGET: usize = 32768;
pub const DEFAULT_DISTRACTORS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SampleKind {
    FileLoc,
    FuncLoc,
    LineLoc,
    CodeEdit,
}

impl SampleKind {
    pub const ALL: [SampleKind; 4] = [SampleKind::FileLoc, SampleKind::FuncLoc, SampleKind::LineLoc, SampleKind::CodeEdit];

    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::FileLoc => "FileLoc",
            SampleKind::FuncLoc => "FuncLoc",
            SampleKind::LineLoc => "LineLoc",
            SampleKind::CodeEdit => "CodeEdit",
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoGoldFiles,
    NoGoldFunctions,
    NoGoldLines,
    SyntaxError,
    NoEdits,
    TokenBudget,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoGoldFiles => "no_gold_files",
            SkipReason::NoGoldFunctions => "no_gold_functions",
            SkipReason::NoGoldLines => "no_gold_lines",
            SkipReason::SyntaxError => "syntax_error",
            SkipReason::NoEdits => "no_edits",
            SkipReason::TokenBudget => "token_budget",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    /// `owner/name`
    pub repo: String,
    pub pr_number: u64,
    pub issue_numbers: Vec<u64>,
    pub token_count: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub kind: SampleKind,
    #[serde(rename = "input")]
    pub input_text: String,
    #[serde(rename = "output")]
    pub output_text: String,
    pub meta: SampleMeta,
}

impl TrainingSample {
    fn sort_key(&self) -> (&str, u64, SampleKind) {
        (&self.meta.repo, self.meta.pr_number, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub token_budget: usize,
    pub distractor_count: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { token_budget: DEFAULT_TOKEN_BUDGET, distractor_count: DEFAULT_DISTRACTORS, seed: 0 }
    }
}

// ---------------------------------------------------------------------------
// excerpts

/// Inclusive, 1-based line range.
pub type Region = (usize, usize);

/// Sorts and merges overlapping or adjacent regions.
pub fn merge_regions(mut regions: Vec<Region>) -> Vec<Region> {
    regions.sort();
    let mut out: Vec<Region> = Vec::with_capacity(regions.len());
    for (s, e) in regions {
        match out.last_mut() {
            Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// The span a line belongs to: its innermost declaration, or the
/// module-level run around it.
pub fn region_of_line(skel: &FileSkeleton, line: usize) -> Region {
    match skel.innermost(line) {
        Some(d) => (d.start_line, d.end_line),
        None => skel.module_run_at(line).unwrap_or((line, line)),
    }
}

/// Spans of named declarations; [`MODULE_LEVEL`] stands for every
/// module-level run of the file.
pub fn regions_of_functions<'a>(
    skel: &FileSkeleton,
    source: &str,
    names: impl IntoIterator<Item = &'a str>,
) -> Vec<Region> {
    let mut out = Vec::new();
    for name in names {
        if name == MODULE_LEVEL {
            out.extend(skel.module_level_runs(source));
        } else if let Some(d) = skel.find(name) {
            out.push((d.start_line, d.end_line));
        }
    }
    merge_regions(out)
}

/// Selected line ranges of one file.
#[derive(Debug, Clone)]
pub struct Excerpt<'a> {
    pub path: &'a str,
    pub source: &'a str,
    pub regions: Vec<Region>,
}

fn render_excerpts(excerpts: &[Excerpt], numbered: bool) -> String {
    let mut out = String::new();
    for (i, ex) in excerpts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("### ");
        out.push_str(ex.path);
        out.push('\n');
        let lines = split_lines(ex.source);
        for (j, &(s, e)) in ex.regions.iter().enumerate() {
            if j > 0 {
                out.push_str("...\n");
            }
            for n in s..=e.min(lines.len()) {
                let raw = lines[n - 1];
                if numbered {
                    out.push_str(&n.to_string());
                    out.push('|');
                    out.push_str(raw.strip_suffix('\n').unwrap_or(raw));
                    out.push('\n');
                } else {
                    out.push_str(raw);
                    if !raw.ends_with('\n') {
                        out.push('\n');
                    }
                }
            }
        }
    }
    out
}

/// `<line>|<text>` rendering of each excerpt, regions separated by `...`.
pub fn render_numbered(excerpts: &[Excerpt]) -> String {
    render_excerpts(excerpts, true)
}

/// Verbatim rendering of each excerpt, regions separated by `...`.
pub fn render_plain(excerpts: &[Excerpt]) -> String {
    render_excerpts(excerpts, false)
}

// ---------------------------------------------------------------------------
// sample builders

fn meta(ctx: &TaskContext) -> SampleMeta {
    SampleMeta {
        repo: ctx.task.repo.full_name(),
        pr_number: ctx.task.pr.number,
        issue_numbers: ctx.task.issue_numbers(),
        token_count: 0,
        files: ctx.gold.files.iter().cloned().collect(),
    }
}

fn sample(ctx: &TaskContext, kind: SampleKind, input_text: String, output_text: String) -> TrainingSample {
    TrainingSample { kind, input_text, output_text, meta: meta(ctx) }
}

fn check_parsable(ctx: &TaskContext) -> Result<(), SkipReason> {
    if ctx.gold.files.is_empty() {
        return Err(SkipReason::NoGoldFiles);
    }
    if !ctx.broken.is_empty() {
        return Err(SkipReason::SyntaxError);
    }
    Ok(())
}

pub fn make_file_loc_sample(ctx: &TaskContext) -> Result<TrainingSample, SkipReason> {
    if ctx.gold.files.is_empty() {
        return Err(SkipReason::NoGoldFiles);
    }
    let input = templates::file_loc(&ctx.task.problem_statement, &ctx.tree.render());
    let output: String = ctx.gold.files.iter().map(|f| format!("{f}\n")).collect();
    Ok(sample(ctx, SampleKind::FileLoc, input, output))
}

/// Rendered skeletons of `paths`, separated by blank lines.
pub fn skeleton_block<'a>(skeletons: impl IntoIterator<Item = &'a FileSkeleton>) -> String {
    skeletons.into_iter().map(render_skeleton).collect::<Vec<_>>().join("\n")
}

pub fn format_functions(functions: &BTreeSet<(String, String)>) -> String {
    functions.iter().map(|(f, q)| format!("{f}: {q}\n")).collect()
}

pub fn make_func_loc_sample(ctx: &TaskContext) -> Result<TrainingSample, SkipReason> {
    check_parsable(ctx)?;
    if ctx.gold.functions.is_empty() {
        return Err(SkipReason::NoGoldFunctions);
    }
    let skels = ctx.gold.files.iter().filter_map(|f| ctx.skeletons.get(f));
    let input = templates::func_loc(&ctx.task.problem_statement, &skeleton_block(skels));
    Ok(sample(ctx, SampleKind::FuncLoc, input, format_functions(&ctx.gold.functions)))
}

/// `path: name: lines [a, b]` per (file, enclosing declaration), sorted.
pub fn format_lines(lines: &BTreeSet<(String, usize)>, skeletons: &BTreeMap<String, FileSkeleton>) -> String {
    let mut grouped: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for (f, l) in lines {
        let name = skeletons.get(f).map_or(MODULE_LEVEL, |s| s.enclosing_declaration(*l));
        grouped.entry((f, name)).or_default().push(*l);
    }
    grouped
        .into_iter()
        .map(|((f, name), ls)| {
            let nums: Vec<String> = ls.iter().map(usize::to_string).collect();
            format!("{f}: {name}: lines [{}]\n", nums.join(", "))
        })
        .collect()
}

fn gold_regions(ctx: &TaskContext) -> BTreeMap<&str, Vec<Region>> {
    let mut out: BTreeMap<&str, Vec<Region>> = BTreeMap::new();
    for (f, l) in &ctx.gold.lines {
        if let Some(skel) = ctx.skeletons.get(f) {
            out.entry(f.as_str()).or_default().push(region_of_line(skel, *l));
        }
    }
    out.into_iter().map(|(f, r)| (f, merge_regions(r))).collect()
}

fn overlaps(a: Region, b: Region) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Per-task generator seeded from the run seed and the task identity.
pub fn task_rng(seed: u64, repo: &str, pr_number: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(repo.as_bytes());
    h.update([0]);
    h.update(pr_number.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Up to `count` functions or methods of the gold files that are not gold
/// and overlap neither gold regions nor each other.
fn pick_distractors(ctx: &TaskContext, gold: &BTreeMap<&str, Vec<Region>>, count: usize, seed: u64) -> Vec<(String, Region)> {
    let gold_names: BTreeSet<(&str, &str)> = ctx.gold.functions.iter().map(|(f, q)| (f.as_str(), q.as_str())).collect();
    let mut candidates: Vec<(String, Region)> = Vec::new();
    for (path, regions) in gold {
        let Some(skel) = ctx.skeletons.get(*path) else { continue };
        for d in &skel.declarations {
            let span = (d.start_line, d.end_line);
            if d.kind == DeclKind::Class
                || gold_names.contains(&(*path, d.qualified_name.as_str()))
                || regions.iter().any(|r| overlaps(*r, span))
            {
                continue;
            }
            candidates.push((path.to_string(), span));
        }
    }
    let mut rng = task_rng(seed, &ctx.task.repo.full_name(), ctx.task.pr.number);
    candidates.shuffle(&mut rng);
    let mut chosen: Vec<(String, Region)> = Vec::new();
    for (path, span) in candidates {
        if chosen.len() == count {
            break;
        }
        if chosen.iter().any(|(p, r)| *p == path && overlaps(*r, span)) {
            continue;
        }
        chosen.push((path, span));
    }
    chosen
}

pub fn make_line_loc_sample(ctx: &TaskContext, distractor_count: usize, seed: u64) -> Result<TrainingSample, SkipReason> {
    check_parsable(ctx)?;
    if ctx.gold.lines.is_empty() {
        return Err(SkipReason::NoGoldLines);
    }
    let gold = gold_regions(ctx);
    let mut regions: BTreeMap<&str, Vec<Region>> = gold.clone();
    for (path, span) in pick_distractors(ctx, &gold, distractor_count, seed) {
        if let Some((k, _)) = gold.get_key_value(path.as_str()) {
            regions.entry(k).or_default().push(span);
        }
    }
    let excerpts: Vec<Excerpt> = regions
        .into_iter()
        .map(|(path, r)| Excerpt { path, source: &ctx.before[path], regions: merge_regions(r) })
        .collect();
    let input = templates::line_loc(&ctx.task.problem_statement, &render_numbered(&excerpts));
    Ok(sample(ctx, SampleKind::LineLoc, input, format_lines(&ctx.gold.lines, &ctx.skeletons)))
}

pub fn make_code_edit_sample(ctx: &TaskContext) -> Result<TrainingSample, SkipReason> {
    check_parsable(ctx)?;
    if ctx.planned.is_empty() {
        return Err(SkipReason::NoEdits);
    }
    let mut regions: BTreeMap<&str, Vec<Region>> = gold_regions(ctx);
    for p in &ctx.planned {
        let entry = regions.entry(p.edit.path.as_str()).or_default();
        if !p.old_lines.is_empty() {
            entry.push((p.old_lines.start + 1, p.old_lines.end));
        }
    }
    let excerpts: Vec<Excerpt> = regions
        .into_iter()
        .map(|(path, r)| Excerpt { path, source: &ctx.before[path], regions: merge_regions(r) })
        .collect();
    let input = templates::code_edit(&ctx.task.problem_statement, &render_plain(&excerpts));
    Ok(sample(ctx, SampleKind::CodeEdit, input, ctx.script().render()))
}

/// Keeps a sample whose input plus output fit in `budget` tokens, recording
/// the count in its metadata.
pub fn token_filter(mut s: TrainingSample, budget: usize, counter: &dyn TokenCounter) -> Result<TrainingSample, SkipReason> {
    let n = counter.count(&format!("{}{}", s.input_text, s.output_text));
    if n > budget {
        return Err(SkipReason::TokenBudget);
    }
    s.meta.token_count = n;
    Ok(s)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskSamples {
    pub samples: Vec<TrainingSample>,
    pub skipped: Vec<(SampleKind, SkipReason)>,
}

/// All four sample kinds for one task, after the token filter.
pub fn build_task_samples(ctx: &TaskContext, cfg: &SampleConfig, counter: &dyn TokenCounter) -> TaskSamples {
    let mut out = TaskSamples::default();
    let attempts = [
        (SampleKind::FileLoc, make_file_loc_sample(ctx)),
        (SampleKind::FuncLoc, make_func_loc_sample(ctx)),
        (SampleKind::LineLoc, make_line_loc_sample(ctx, cfg.distractor_count, cfg.seed)),
        (SampleKind::CodeEdit, make_code_edit_sample(ctx)),
    ];
    for (kind, attempt) in attempts {
        match attempt.and_then(|s| token_filter(s, cfg.token_budget, counter)) {
            Ok(s) => out.samples.push(s),
            Err(reason) => out.skipped.push((kind, reason)),
        }
    }
    out
}

/// Sorts by (repo, PR number, kind) and writes one JSON object per line.
pub fn write_jsonl<W: Write>(mut out: W, samples: &[TrainingSample]) -> std::io::Result<usize> {
    let mut sorted: Vec<&TrainingSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    for s in &sorted {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(sorted.len())
}

pub fn emit_jsonl(samples: &[TrainingSample], out_path: &Path) -> std::io::Result<usize> {
    let file = std::fs::File::create(out_path)?;
    write_jsonl(std::io::BufWriter::new(file), samples)
}
