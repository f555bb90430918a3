//! The Search/Replace edit format.
//!
//! Wire grammar (bit-exact), repeated zero or more times with arbitrary text
//! between blocks:
//!
//! ```text
//! path/to/file.py
//! <<<<<<< SEARCH
//! ...original lines...
//! =======
//! ...replacement lines...
//! >>>>>>> REPLACE
//! ```
//!
//! A section whose text does not end in a newline (the last line of a file
//! without a terminator) is followed by the line `\ No newline at end of file`.
//! An empty SEARCH section is only meaningful against an empty file.

use crate::diffmap::{FileDiff, FileStatus, Hunk, HunkLine, LineTag};
use crate::lcs::{self, Change};
use crate::text::{find_all, split_lines};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::Range;
use thiserror::Error;

pub const SEARCH_MARKER: &str = "<<<<<<< SEARCH";
pub const DIVIDER_MARKER: &str = "=======";
pub const REPLACE_MARKER: &str = ">>>>>>> REPLACE";
pub const NO_EOL_MARKER: &str = "\\ No newline at end of file";

/// Unchanged lines allowed between two changes before they become separate
/// edits.
const MERGE_GAP: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReplaceEdit {
    pub path: String,
    pub search: String,
    pub replace: String,
    /// 1-based index among the search text's matches; `None` requires a
    /// unique match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occurrence: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub edits: Vec<SearchReplaceEdit>,
}

impl EditScript {
    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn paths(&self) -> BTreeSet<&str> {
        self.edits.iter().map(|e| e.path.as_str()).collect()
    }

    /// Renders the script in the wire grammar. Blocks are separated by one
    /// blank line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.edits.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&e.path);
            out.push('\n');
            out.push_str(SEARCH_MARKER);
            out.push('\n');
            push_section(&mut out, &e.search);
            out.push_str(DIVIDER_MARKER);
            out.push('\n');
            push_section(&mut out, &e.replace);
            out.push_str(REPLACE_MARKER);
            out.push('\n');
        }
        out
    }
}

fn push_section(out: &mut String, text: &str) {
    out.push_str(text);
    if !text.is_empty() && !text.ends_with('\n') {
        out.push('\n');
        out.push_str(NO_EOL_MARKER);
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("line {line_no}: expected `{expected}`")]
    MalformedEdit { line_no: usize, expected: String },
    #[error("{path}: search text of edit {edit_index} not found")]
    SearchNotFound { path: String, edit_index: usize },
    #[error("{path}: search text of edit {edit_index} matches {match_count} times")]
    AmbiguousMatch { path: String, edit_index: usize, match_count: usize },
    #[error("unknown path {0}")]
    UnknownPath(String),
}

// ---------------------------------------------------------------------------
// serialize

/// One planned edit with the pre-edit line range its search text covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedEdit {
    pub edit: SearchReplaceEdit,
    /// 0-based, half-open range of pre-edit lines.
    pub old_lines: Range<usize>,
}

/// Builds the Search/Replace script turning `before` into `after`. Only
/// paths present in both maps are considered.
pub fn serialize_edits(
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
) -> EditScript {
    EditScript {
        edits: plan_edits(before, after).into_iter().map(|p| p.edit).collect(),
    }
}

/// Same as [`serialize_edits`] but keeps each edit's pre-edit line span.
pub fn plan_edits(
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
) -> Vec<PlannedEdit> {
    let mut out = Vec::new();
    for (path, old_text) in before {
        let Some(new_text) = after.get(path) else { continue };
        if old_text == new_text {
            continue;
        }
        out.extend(plan_file(path, old_text, new_text));
    }
    out
}

#[derive(Debug, Clone)]
struct Core {
    old: Range<usize>,
    new: Range<usize>,
}

impl Core {
    fn join(a: &Core, b: &Core) -> Core {
        Core { old: a.old.start..b.old.end, new: a.new.start..b.new.end }
    }
}

enum Extension {
    Done(Range<usize>),
    MergePrevious,
    MergeNext,
}

fn plan_file(path: &str, old_text: &str, new_text: &str) -> Vec<PlannedEdit> {
    let old = split_lines(old_text);
    let new = split_lines(new_text);

    let mut queue: VecDeque<Core> = VecDeque::new();
    for Change { old: o, new: n } in lcs::changes(&old, &new) {
        match queue.back_mut() {
            Some(last) if o.start - last.old.end <= MERGE_GAP => {
                last.old.end = o.end;
                last.new.end = n.end;
            }
            _ => queue.push_back(Core { old: o, new: n }),
        }
    }

    let mut planned: Vec<(Core, Range<usize>)> = Vec::new();
    while let Some(mut core) = queue.pop_front() {
        loop {
            let prev = planned.last().map(|(c, _)| c.clone());
            let next_start = queue.front().map(|c| c.old.start);
            match extend(&old, &new, &core, prev.as_ref(), next_start) {
                Extension::Done(range) => {
                    planned.push((core, range));
                    break;
                }
                Extension::MergePrevious => {
                    let (p, _) = planned.pop().expect("previous edit exists");
                    core = Core::join(&p, &core);
                }
                Extension::MergeNext => {
                    let n = queue.pop_front().expect("next change exists");
                    core = Core::join(&core, &n);
                }
            }
        }
    }

    planned
        .into_iter()
        .map(|(core, range)| {
            let before_ctx = core.old.start - range.start;
            let after_ctx = range.end - core.old.end;
            let new_range = core.new.start - before_ctx..core.new.end + after_ctx;
            PlannedEdit {
                edit: SearchReplaceEdit {
                    path: path.to_string(),
                    search: old[range.clone()].concat(),
                    replace: new[new_range].concat(),
                    occurrence: None,
                },
                old_lines: range,
            }
        })
        .collect()
}

/// Grows the search window around `core` until its text is unique in the
/// file as it stands after all earlier edits are applied.
fn extend(
    old: &[&str],
    new: &[&str],
    core: &Core,
    prev: Option<&Core>,
    next_start: Option<usize>,
) -> Extension {
    let floor = prev.map_or(0, |p| p.old.end);
    let ceil = next_start.unwrap_or(old.len());
    // text after the previous edits: new lines up to the previous change,
    // then untouched old lines.
    let current: String = match prev {
        Some(p) => {
            let mut s = new[..p.new.end].concat();
            s.push_str(&old[p.old.end..].concat());
            s
        }
        None => old.concat(),
    };

    let (mut lo, mut hi) = (core.old.start, core.old.end);
    let mut up_turn = true;
    loop {
        let search = old[lo..hi].concat();
        if current.is_empty() && search.is_empty() {
            return Extension::Done(lo..hi);
        }
        if !search.is_empty() && find_all(&current, &search).len() == 1 {
            return Extension::Done(lo..hi);
        }
        let can_up = lo > floor;
        let can_down = hi < ceil;
        if up_turn && can_up {
            lo -= 1;
        } else if can_down {
            hi += 1;
        } else if can_up {
            lo -= 1;
        } else if hi < old.len() {
            return Extension::MergeNext;
        } else if lo > 0 {
            return Extension::MergePrevious;
        } else {
            return Extension::Done(lo..hi);
        }
        up_turn = !up_turn;
    }
}

// ---------------------------------------------------------------------------
// parse

/// Parses every block in `text`. Text outside blocks is ignored.
pub fn parse_edits(text: &str) -> Result<EditScript, EditError> {
    let lines: Vec<&str> = text
        .split_inclusive('\n')
        .map(|l| l.strip_suffix('\n').unwrap_or(l))
        .collect();
    let malformed = |idx: usize, expected: &str| EditError::MalformedEdit {
        line_no: idx + 1,
        expected: expected.to_string(),
    };
    let is_padded = |line: &str, marker: &str| line != marker && line.trim() == marker;

    let mut edits = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if is_padded(line, SEARCH_MARKER) {
            return Err(malformed(i, SEARCH_MARKER));
        }
        if line != SEARCH_MARKER {
            i += 1;
            continue;
        }
        let path = if i > 0 { lines[i - 1].trim() } else { "" };
        if path.is_empty() || [SEARCH_MARKER, DIVIDER_MARKER, REPLACE_MARKER].contains(&path) {
            return Err(malformed(i.saturating_sub(1), "file path"));
        }

        i += 1;
        let search_start = i;
        loop {
            let Some(&l) = lines.get(i) else {
                return Err(malformed(i, DIVIDER_MARKER));
            };
            if l == DIVIDER_MARKER {
                break;
            }
            if l == SEARCH_MARKER || l == REPLACE_MARKER || is_padded(l, DIVIDER_MARKER) {
                return Err(malformed(i, DIVIDER_MARKER));
            }
            if is_padded(l, SEARCH_MARKER) || is_padded(l, REPLACE_MARKER) {
                return Err(malformed(i, l.trim()));
            }
            i += 1;
        }
        let search = section_text(&lines[search_start..i]);

        i += 1;
        let replace_start = i;
        loop {
            let Some(&l) = lines.get(i) else {
                return Err(malformed(i, REPLACE_MARKER));
            };
            if l == REPLACE_MARKER {
                break;
            }
            if l == SEARCH_MARKER || l == DIVIDER_MARKER || is_padded(l, REPLACE_MARKER) {
                return Err(malformed(i, REPLACE_MARKER));
            }
            if is_padded(l, SEARCH_MARKER) || is_padded(l, DIVIDER_MARKER) {
                return Err(malformed(i, l.trim()));
            }
            i += 1;
        }
        let replace = section_text(&lines[replace_start..i]);
        i += 1;

        edits.push(SearchReplaceEdit {
            path: path.to_string(),
            search,
            replace,
            occurrence: None,
        });
    }
    Ok(EditScript { edits })
}

fn section_text(lines: &[&str]) -> String {
    let (body, no_eol) = match lines.split_last() {
        Some((last, rest)) if *last == NO_EOL_MARKER && !rest.is_empty() => (rest, true),
        _ => (lines, false),
    };
    let mut s = String::new();
    for l in body {
        s.push_str(l);
        s.push('\n');
    }
    if no_eol {
        s.pop();
    }
    s
}

// ---------------------------------------------------------------------------
// apply

/// Applies `script` in order against progressively edited copies of `files`.
pub fn apply_edits(
    files: &BTreeMap<String, String>,
    script: &EditScript,
) -> Result<BTreeMap<String, String>, EditError> {
    let mut out = files.clone();
    for (idx, edit) in script.edits.iter().enumerate() {
        let text = out
            .get_mut(&edit.path)
            .ok_or_else(|| EditError::UnknownPath(edit.path.clone()))?;
        *text = apply_one(text, edit, idx)?;
    }
    Ok(out)
}

fn pick(
    matches: usize,
    edit: &SearchReplaceEdit,
    idx: usize,
) -> Result<usize, EditError> {
    match (matches, edit.occurrence) {
        (0, _) => Err(EditError::SearchNotFound { path: edit.path.clone(), edit_index: idx }),
        (_, Some(k)) if k >= 1 && k <= matches => Ok(k - 1),
        (_, Some(_)) => Err(EditError::SearchNotFound { path: edit.path.clone(), edit_index: idx }),
        (1, None) => Ok(0),
        (n, None) => Err(EditError::AmbiguousMatch {
            path: edit.path.clone(),
            edit_index: idx,
            match_count: n,
        }),
    }
}

fn apply_one(text: &str, edit: &SearchReplaceEdit, idx: usize) -> Result<String, EditError> {
    if edit.search.is_empty() {
        return if text.is_empty() {
            Ok(edit.replace.clone())
        } else {
            Err(EditError::SearchNotFound { path: edit.path.clone(), edit_index: idx })
        };
    }

    let exact = find_all(text, &edit.search);
    if !exact.is_empty() {
        let at = exact[pick(exact.len(), edit, idx)?];
        let mut out = String::with_capacity(text.len() + edit.replace.len());
        out.push_str(&text[..at]);
        out.push_str(&edit.replace);
        out.push_str(&text[at + edit.search.len()..]);
        return Ok(out);
    }

    // fallback: whole lines compared with trailing whitespace stripped
    let file_lines = split_lines(text);
    let want: Vec<&str> = split_lines(&edit.search).into_iter().map(trim_line).collect();
    let have: Vec<&str> = file_lines.iter().copied().map(trim_line).collect();
    let starts: Vec<usize> = if want.len() > have.len() {
        Vec::new()
    } else {
        (0..=have.len() - want.len())
            .filter(|&s| have[s..s + want.len()] == want[..])
            .collect()
    };
    let s = starts
        .get(pick(starts.len(), edit, idx)?)
        .copied()
        .expect("picked index in range");
    let byte_start: usize = file_lines[..s].iter().map(|l| l.len()).sum();
    let byte_end: usize = byte_start + file_lines[s..s + want.len()].iter().map(|l| l.len()).sum::<usize>();
    let mut replacement = edit.replace.clone();
    if text[..byte_end].ends_with('\n')
        && !edit.search.ends_with('\n')
        && !replacement.is_empty()
        && !replacement.ends_with('\n')
    {
        replacement.push('\n');
    }
    Ok(format!("{}{}{}", &text[..byte_start], replacement, &text[byte_end..]))
}

fn trim_line(line: &str) -> &str {
    line.trim_end_matches(['\n', '\r', ' ', '\t'])
}

// ---------------------------------------------------------------------------
// unified diff

/// Renders a git-style unified diff between the two file maps. Paths missing
/// on one side become additions or deletions.
pub fn to_unified_diff(
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
    context: usize,
) -> String {
    let mut out = String::new();
    for fd in file_diffs(before, after, context) {
        out.push_str(&fd.render());
    }
    out
}

/// Structured form of [`to_unified_diff`].
pub fn file_diffs(
    before: &BTreeMap<String, String>,
    after: &BTreeMap<String, String>,
    context: usize,
) -> Vec<FileDiff> {
    let paths: BTreeSet<&String> = before.keys().chain(after.keys()).collect();
    let mut out = Vec::new();
    for path in paths {
        let (old_text, new_text) = (before.get(path), after.get(path));
        if old_text == new_text {
            continue;
        }
        let old = split_lines(old_text.map_or("", String::as_str));
        let new = split_lines(new_text.map_or("", String::as_str));
        let status = match (old_text, new_text) {
            (None, _) => FileStatus::Added,
            (_, None) => FileStatus::Deleted,
            _ => FileStatus::Modified,
        };
        out.push(FileDiff {
            old_path: old_text.map(|_| path.clone()),
            new_path: new_text.map(|_| path.clone()),
            status,
            hunks: hunks(&old, &new, context),
        });
    }
    out
}

fn hunks(old: &[&str], new: &[&str], context: usize) -> Vec<Hunk> {
    let cs = lcs::changes(old, new);
    let mut groups: Vec<Vec<Change>> = Vec::new();
    for c in cs {
        match groups.last_mut() {
            Some(g) if c.old.start - g.last().unwrap().old.end <= 2 * context => g.push(c),
            _ => groups.push(vec![c]),
        }
    }

    let mut out = Vec::new();
    for g in groups {
        let first = &g[0];
        let last = &g[g.len() - 1];
        let o_start = first.old.start.saturating_sub(context);
        let o_end = (last.old.end + context).min(old.len());
        let n_start = first.new.start - (first.old.start - o_start);
        let n_end = last.new.end + (o_end - last.old.end);

        let mut lines = Vec::new();
        let mut oi = o_start;
        for c in &g {
            for l in &old[oi..c.old.start] {
                lines.push(hunk_line(LineTag::Context, l));
            }
            for l in &old[c.old.clone()] {
                lines.push(hunk_line(LineTag::Del, l));
            }
            for l in &new[c.new.clone()] {
                lines.push(hunk_line(LineTag::Add, l));
            }
            oi = c.old.end;
        }
        for l in &old[oi..o_end] {
            lines.push(hunk_line(LineTag::Context, l));
        }
        out.push(Hunk {
            old_start: if o_end > o_start { o_start + 1 } else { o_start },
            old_len: o_end - o_start,
            new_start: if n_end > n_start { n_start + 1 } else { n_start },
            new_len: n_end - n_start,
            lines,
        });
    }
    out
}

fn hunk_line(tag: LineTag, raw: &str) -> HunkLine {
    match raw.strip_suffix('\n') {
        Some(t) => HunkLine { tag, text: t.to_string(), no_newline: false },
        None => HunkLine { tag, text: raw.to_string(), no_newline: true },
    }
}
