//! Unified diff parsing and PR-derived gold localization labels.

use crate::exclusion::ExclusionRules;
use crate::skeleton::FileSkeleton;
use crate::text::split_lines;
use log::debug;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileStatus {
    Modified,
    Added,
    Deleted,
    Renamed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineTag {
    Context,
    Del,
    Add,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HunkLine {
    pub tag: LineTag,
    /// Line text without its terminator.
    pub text: String,
    /// Set when the line is followed by `\ No newline at end of file`.
    #[serde(default)]
    pub no_newline: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<HunkLine>,
}

impl Hunk {
    fn counts(&self) -> (usize, usize) {
        let mut old = 0;
        let mut new = 0;
        for l in &self.lines {
            match l.tag {
                LineTag::Context => {
                    old += 1;
                    new += 1;
                }
                LineTag::Del => old += 1,
                LineTag::Add => new += 1,
            }
        }
        (old, new)
    }

    /// Index of the first pre-edit line this hunk touches, 0-based.
    fn old_index(&self) -> usize {
        if self.old_len == 0 {
            self.old_start
        } else {
            self.old_start - 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    /// `None` for added files.
    pub old_path: Option<String>,
    /// `None` for deleted files.
    pub new_path: Option<String>,
    pub status: FileStatus,
    pub hunks: Vec<Hunk>,
}

impl FileDiff {
    /// The pre-edit path when there is one, otherwise the new path.
    pub fn path(&self) -> &str {
        self.old_path
            .as_deref()
            .or(self.new_path.as_deref())
            .unwrap_or_default()
    }

    /// Renders this entry as a git-style unified diff.
    pub fn render(&self) -> String {
        let a = self.old_path.as_deref().or(self.new_path.as_deref()).unwrap_or_default();
        let b = self.new_path.as_deref().or(self.old_path.as_deref()).unwrap_or_default();
        let mut out = format!("diff --git a/{a} b/{b}\n");
        match self.status {
            FileStatus::Added => out.push_str("new file mode 100644\n"),
            FileStatus::Deleted => out.push_str("deleted file mode 100644\n"),
            FileStatus::Renamed => {
                let _ = write!(out, "rename from {a}\nrename to {b}\n");
            }
            FileStatus::Modified => {}
        }
        if self.hunks.is_empty() {
            return out;
        }
        match &self.old_path {
            Some(p) => {
                let _ = writeln!(out, "--- a/{p}");
            }
            None => out.push_str("--- /dev/null\n"),
        }
        match &self.new_path {
            Some(p) => {
                let _ = writeln!(out, "+++ b/{p}");
            }
            None => out.push_str("+++ /dev/null\n"),
        }
        for h in &self.hunks {
            let _ = writeln!(
                out,
                "@@ -{} +{} @@",
                range_spec(h.old_start, h.old_len),
                range_spec(h.new_start, h.new_len)
            );
            for l in &h.lines {
                out.push(match l.tag {
                    LineTag::Context => ' ',
                    LineTag::Del => '-',
                    LineTag::Add => '+',
                });
                out.push_str(&l.text);
                out.push('\n');
                if l.no_newline {
                    out.push_str("\\ No newline at end of file\n");
                }
            }
        }
        out
    }
}

fn range_spec(start: usize, len: usize) -> String {
    if len == 1 {
        start.to_string()
    } else {
        format!("{start},{len}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("malformed diff at line {line_no}: {reason}")]
    MalformedDiff { line_no: usize, reason: String },
    #[error("no skeleton for {0}")]
    MissingSkeleton(String),
    #[error("{path}: hunk {hunk} does not apply: {reason}")]
    ApplyFailed { path: String, hunk: usize, reason: String },
}

fn malformed(idx: usize, reason: impl Into<String>) -> DiffError {
    DiffError::MalformedDiff { line_no: idx + 1, reason: reason.into() }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Default)]
struct Pending {
    old_path: Option<String>,
    new_path: Option<String>,
    git_a: Option<String>,
    git_b: Option<String>,
    added: bool,
    deleted: bool,
    rename_from: Option<String>,
    rename_to: Option<String>,
    binary: bool,
    saw_headers: bool,
    hunks: Vec<Hunk>,
}

impl Pending {
    fn finish(self) -> Option<FileDiff> {
        if self.binary {
            debug!("skipping binary diff for {:?}", self.git_a.or(self.old_path));
            return None;
        }
        let is_rename = self.rename_from.is_some() || self.rename_to.is_some();
        if self.hunks.is_empty() && !self.added && !self.deleted && !is_rename {
            // mode change only
            if self.git_a.is_some() {
                debug!("skipping mode-only diff for {:?}", self.git_a);
            }
            return None;
        }
        let (old_path, new_path, status) = if self.added {
            (None, self.new_path.or(self.git_b), FileStatus::Added)
        } else if self.deleted {
            (self.old_path.or(self.git_a), None, FileStatus::Deleted)
        } else {
            let old = self.rename_from.or(self.old_path).or(self.git_a);
            let new = self.rename_to.or(self.new_path).or(self.git_b);
            let status = if is_rename || (old.is_some() && old != new) {
                FileStatus::Renamed
            } else {
                FileStatus::Modified
            };
            (old, new, status)
        };
        Some(FileDiff { old_path, new_path, status, hunks: self.hunks })
    }
}

fn strip_path(raw: &str) -> Option<String> {
    let p = raw.split('\t').next().unwrap_or(raw).trim_end();
    let p = p.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(p);
    if p == "/dev/null" {
        return None;
    }
    let p = p
        .strip_prefix("a/")
        .or_else(|| p.strip_prefix("b/"))
        .unwrap_or(p);
    Some(p.to_string())
}

fn parse_range(s: &str, idx: usize) -> Result<(usize, usize), DiffError> {
    let (start, len) = match s.split_once(',') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let start = start
        .parse::<usize>()
        .map_err(|_| malformed(idx, format!("bad hunk range `{s}`")))?;
    let len = match len {
        Some(l) => l
            .parse::<usize>()
            .map_err(|_| malformed(idx, format!("bad hunk range `{s}`")))?,
        None => 1,
    };
    Ok((start, len))
}

fn parse_hunk_header(line: &str, idx: usize) -> Result<Hunk, DiffError> {
    let rest = line
        .strip_prefix("@@ -")
        .ok_or_else(|| malformed(idx, "bad hunk header"))?;
    let (old, rest) = rest
        .split_once(" +")
        .ok_or_else(|| malformed(idx, "bad hunk header"))?;
    let (new, _) = rest
        .split_once(" @@")
        .ok_or_else(|| malformed(idx, "bad hunk header"))?;
    let (old_start, old_len) = parse_range(old, idx)?;
    let (new_start, new_len) = parse_range(new, idx)?;
    Ok(Hunk { old_start, old_len, new_start, new_len, lines: Vec::new() })
}

/// Parses standard (optionally git-extended) unified diff text. Preamble
/// text such as commit headers is skipped; binary and mode-only entries are
/// dropped.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FileDiff>, DiffError> {
    let lines: Vec<&str> = text
        .split_inclusive('\n')
        .map(|l| l.strip_suffix('\n').unwrap_or(l))
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    let mut i = 0;

    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            if let Some(p) = cur.take() {
                out.extend(p.finish());
            }
            let mut p = Pending::default();
            if let Some((a, b)) = rest.split_once(" b/") {
                p.git_a = strip_path(a);
                p.git_b = Some(b.to_string());
            }
            cur = Some(p);
            i += 1;
            continue;
        }
        if line.starts_with("--- ") && lines.get(i + 1).is_some_and(|n| n.starts_with("+++ ")) {
            let needs_new = cur.as_ref().is_none_or(|p| p.saw_headers);
            if needs_new {
                if let Some(p) = cur.take() {
                    out.extend(p.finish());
                }
                cur = Some(Pending::default());
            }
            let p = cur.as_mut().expect("pending entry");
            p.saw_headers = true;
            p.old_path = strip_path(&line[4..]);
            p.new_path = strip_path(&lines[i + 1][4..]);
            if p.old_path.is_none() {
                p.added = true;
            }
            if p.new_path.is_none() {
                p.deleted = true;
            }
            i += 2;
            continue;
        }
        if line.starts_with("@@ ") {
            let p = cur
                .as_mut()
                .filter(|p| p.saw_headers)
                .ok_or_else(|| malformed(i, "hunk before file header"))?;
            let mut hunk = parse_hunk_header(line, i)?;
            let header_idx = i;
            i += 1;
            let (mut old_seen, mut new_seen) = (0usize, 0usize);
            while old_seen < hunk.old_len || new_seen < hunk.new_len {
                let Some(&l) = lines.get(i) else {
                    return Err(malformed(i, format!(
                        "hunk at line {} ends early: {old_seen}/{} old, {new_seen}/{} new lines",
                        header_idx + 1, hunk.old_len, hunk.new_len
                    )));
                };
                let (tag, body) = match l.chars().next() {
                    Some(' ') => (LineTag::Context, &l[1..]),
                    None => (LineTag::Context, ""),
                    Some('-') => (LineTag::Del, &l[1..]),
                    Some('+') => (LineTag::Add, &l[1..]),
                    Some('\\') => {
                        if let Some(last) = hunk.lines.last_mut() {
                            last.no_newline = true;
                        }
                        i += 1;
                        continue;
                    }
                    _ => {
                        return Err(malformed(i, format!(
                            "hunk at line {} ends early: {old_seen}/{} old, {new_seen}/{} new lines",
                            header_idx + 1, hunk.old_len, hunk.new_len
                        )))
                    }
                };
                match tag {
                    LineTag::Context => {
                        old_seen += 1;
                        new_seen += 1;
                    }
                    LineTag::Del => old_seen += 1,
                    LineTag::Add => new_seen += 1,
                }
                if old_seen > hunk.old_len || new_seen > hunk.new_len {
                    return Err(malformed(i, "hunk longer than its header"));
                }
                hunk.lines.push(HunkLine { tag, text: body.to_string(), no_newline: false });
                i += 1;
            }
            if lines.get(i).is_some_and(|l| l.starts_with('\\')) {
                if let Some(last) = hunk.lines.last_mut() {
                    last.no_newline = true;
                }
                i += 1;
            }
            debug_assert_eq!(hunk.counts(), (hunk.old_len, hunk.new_len));
            p.hunks.push(hunk);
            continue;
        }
        if let Some(p) = cur.as_mut() {
            if line.starts_with("new file mode") {
                p.added = true;
            } else if line.starts_with("deleted file mode") {
                p.deleted = true;
            } else if let Some(r) = line.strip_prefix("rename from ") {
                p.rename_from = Some(r.to_string());
            } else if let Some(r) = line.strip_prefix("rename to ") {
                p.rename_to = Some(r.to_string());
            } else if line.starts_with("Binary files ") || line == "GIT binary patch" {
                p.binary = true;
            }
        }
        i += 1;
    }
    if let Some(p) = cur.take() {
        out.extend(p.finish());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// application

/// Applies one file's hunks to `before`, verifying every context and deleted
/// line.
pub fn apply_file_diff(before: &str, diff: &FileDiff) -> Result<String, DiffError> {
    let old = split_lines(before);
    let path = diff.path().to_string();
    let fail = |hunk: usize, reason: String| DiffError::ApplyFailed {
        path: path.clone(),
        hunk,
        reason,
    };
    let mut out = String::with_capacity(before.len());
    let mut cursor = 0usize;
    for (hi, h) in diff.hunks.iter().enumerate() {
        let start = h.old_index();
        if start < cursor || start > old.len() {
            return Err(fail(hi, format!("hunk starts at line {} out of order or range", start + 1)));
        }
        for l in &old[cursor..start] {
            out.push_str(l);
        }
        cursor = start;
        for l in &h.lines {
            let rendered = if l.no_newline { l.text.clone() } else { format!("{}\n", l.text) };
            match l.tag {
                LineTag::Context | LineTag::Del => {
                    let have = old.get(cursor).copied();
                    if have != Some(rendered.as_str()) {
                        return Err(fail(
                            hi,
                            format!("line {} is {:?}, expected {:?}", cursor + 1, have, rendered),
                        ));
                    }
                    cursor += 1;
                    if l.tag == LineTag::Context {
                        out.push_str(&rendered);
                    }
                }
                LineTag::Add => out.push_str(&rendered),
            }
        }
    }
    for l in &old[cursor..] {
        out.push_str(l);
    }
    Ok(out)
}

/// Applies a whole patch to a file map, handling additions, deletions and
/// renames.
pub fn apply_patch(
    files: &BTreeMap<String, String>,
    diffs: &[FileDiff],
) -> Result<BTreeMap<String, String>, DiffError> {
    let mut out = files.clone();
    for d in diffs {
        match d.status {
            FileStatus::Added => {
                let path = d.new_path.clone().unwrap_or_default();
                let text = apply_file_diff("", d)?;
                out.insert(path, text);
            }
            FileStatus::Deleted => {
                let path = d.path().to_string();
                let before = out.remove(&path).ok_or_else(|| DiffError::ApplyFailed {
                    path: path.clone(),
                    hunk: 0,
                    reason: "file missing".into(),
                })?;
                let rest = apply_file_diff(&before, d)?;
                if !rest.is_empty() {
                    return Err(DiffError::ApplyFailed {
                        path,
                        hunk: 0,
                        reason: "deleted file has remaining content".into(),
                    });
                }
            }
            FileStatus::Modified | FileStatus::Renamed => {
                let old_path = d.path().to_string();
                let before = out.remove(&old_path).ok_or_else(|| DiffError::ApplyFailed {
                    path: old_path.clone(),
                    hunk: 0,
                    reason: "file missing".into(),
                })?;
                let after = apply_file_diff(&before, d)?;
                out.insert(d.new_path.clone().unwrap_or(old_path), after);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// gold labels

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLocalization {
    pub files: BTreeSet<String>,
    /// `(file, qualified name)`; module-level lines use [`crate::MODULE_LEVEL`].
    pub functions: BTreeSet<(String, String)>,
    /// `(file, 1-based pre-edit line)`.
    pub lines: BTreeSet<(String, usize)>,
}

impl GoldLocalization {
    pub fn is_empty(&self) -> bool {
        self.files.is_empty() && self.functions.is_empty() && self.lines.is_empty()
    }
}

/// Pre-edit paths of the diff entries that count toward gold files:
/// modified, renamed and deleted source files admitted by `rules`.
pub fn gold_files(diffs: &[FileDiff], rules: &ExclusionRules) -> BTreeSet<String> {
    diffs
        .iter()
        .filter(|d| d.status != FileStatus::Added)
        .map(|d| d.path().to_string())
        .filter(|p| rules.admits(p))
        .collect()
}

/// Pre-edit line numbers a hunk list touches: deleted lines, plus one anchor
/// line for each run of insertions with no deletion next to it.
pub fn touched_lines(hunks: &[Hunk], old_line_count: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for h in hunks {
        let mut next_old = h.old_index() + 1; // 1-based number of the next old line
        let mut i = 0;
        while i < h.lines.len() {
            if h.lines[i].tag == LineTag::Context {
                next_old += 1;
                i += 1;
                continue;
            }
            // one run of consecutive changed lines
            let run_start_old = next_old;
            let mut has_del = false;
            while i < h.lines.len() && h.lines[i].tag != LineTag::Context {
                if h.lines[i].tag == LineTag::Del {
                    has_del = true;
                    out.insert(next_old);
                    next_old += 1;
                }
                i += 1;
            }
            if !has_del {
                let anchor = run_start_old - 1;
                if anchor >= 1 {
                    out.insert(anchor);
                } else if old_line_count > 0 {
                    out.insert(1);
                }
            }
        }
    }
    out
}

/// Derives file, function and line gold labels from a PR's diff and the
/// pre-edit skeletons of the touched files.
pub fn gold_labels(
    diffs: &[FileDiff],
    skeletons: &BTreeMap<String, FileSkeleton>,
    rules: &ExclusionRules,
) -> Result<GoldLocalization, DiffError> {
    let mut gold = GoldLocalization::default();
    for d in diffs {
        if d.status == FileStatus::Added {
            continue;
        }
        let path = d.path();
        if !rules.admits(path) {
            continue;
        }
        let skel = skeletons
            .get(path)
            .ok_or_else(|| DiffError::MissingSkeleton(path.to_string()))?;
        gold.files.insert(path.to_string());
        for line in touched_lines(&d.hunks, skel.line_count) {
            gold.functions
                .insert((path.to_string(), skel.enclosing_declaration(line).to_string()));
            gold.lines.insert((path.to_string(), line));
        }
    }
    Ok(gold)
}
