//! Python declaration skeletons.
//!
//! A small logical-line scanner: it understands strings (including
//! triple-quoted and prefixed ones), comments, bracket nesting, backslash
//! continuations and indentation, which is all that is needed to find
//! `class`/`def` headers and the exact line spans of their bodies. It is not
//! a full grammar; structural errors it can see (unterminated strings,
//! unbalanced brackets, bad indentation, headers without a colon) are
//! reported and the file is not parsed partially.

use crate::MODULE_LEVEL;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclKind {
    Class,
    Function,
    Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declaration {
    pub kind: DeclKind,
    pub name: String,
    pub qualified_name: String,
    /// Header line(s) from `def`/`class` through the terminating colon, at
    /// original indentation.
    pub signature_text: String,
    pub start_line: usize,
    /// Inclusive; last line of the body.
    pub end_line: usize,
}

impl Declaration {
    pub fn contains(&self, line: usize) -> bool {
        self.start_line <= line && line <= self.end_line
    }

    /// True for declarations not nested in any other.
    pub fn is_top_level(&self) -> bool {
        !self.qualified_name.contains('.')
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSkeleton {
    pub path: String,
    /// Document order (ascending `start_line`).
    pub declarations: Vec<Declaration>,
    /// Number of physical lines in the source.
    pub line_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}:{line}: syntax error: {message}")]
pub struct SyntaxError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

impl FileSkeleton {
    /// Innermost declaration containing `line`, or [`MODULE_LEVEL`].
    pub fn enclosing_declaration(&self, line: usize) -> &str {
        self.innermost(line)
            .map_or(MODULE_LEVEL, |d| d.qualified_name.as_str())
    }

    pub fn innermost(&self, line: usize) -> Option<&Declaration> {
        self.declarations
            .iter()
            .filter(|d| d.contains(line))
            .max_by_key(|d| d.start_line)
    }

    pub fn find(&self, qualified_name: &str) -> Option<&Declaration> {
        self.declarations
            .iter()
            .find(|d| d.qualified_name == qualified_name)
    }

    /// Maximal runs of lines outside every top-level declaration that
    /// contain at least one non-blank line, as inclusive 1-based ranges.
    pub fn module_level_runs(&self, source: &str) -> Vec<(usize, usize)> {
        let lines: Vec<&str> = source.lines().collect();
        let mut covered = vec![false; self.line_count + 2];
        for d in self.declarations.iter().filter(|d| d.is_top_level()) {
            covered[d.start_line..=d.end_line.min(self.line_count)].fill(true);
        }
        let mut runs = Vec::new();
        let mut l = 1;
        while l <= self.line_count {
            if covered[l] {
                l += 1;
                continue;
            }
            let start = l;
            while l <= self.line_count && !covered[l] {
                l += 1;
            }
            let end = l - 1;
            if (start..=end).any(|i| lines.get(i - 1).is_some_and(|t| !t.trim().is_empty())) {
                runs.push((start, end));
            }
        }
        runs
    }

    /// The module-level run containing `line`, when the line is outside
    /// every top-level declaration.
    pub fn module_run_at(&self, line: usize) -> Option<(usize, usize)> {
        if self
            .declarations
            .iter()
            .any(|d| d.is_top_level() && d.contains(line))
        {
            return None;
        }
        let prev_end = self
            .declarations
            .iter()
            .filter(|d| d.is_top_level() && d.end_line < line)
            .map(|d| d.end_line)
            .max()
            .unwrap_or(0);
        let next_start = self
            .declarations
            .iter()
            .filter(|d| d.is_top_level() && d.start_line > line)
            .map(|d| d.start_line)
            .min()
            .unwrap_or(self.line_count + 1);
        Some((prev_end + 1, next_start - 1))
    }
}

/// Parses `source` and returns its skeleton.
pub fn parse_file(path: &str, source: &str) -> Result<FileSkeleton, SyntaxError> {
    let declarations = parse_declarations(source).map_err(|(line, message)| SyntaxError {
        path: path.to_string(),
        line,
        message,
    })?;
    Ok(FileSkeleton {
        path: path.to_string(),
        declarations,
        line_count: source.lines().count(),
    })
}

/// Every class and function declaration in document order. Errors carry
/// the offending 1-based line and a message.
pub fn parse_declarations(source: &str) -> Result<Vec<Declaration>, (usize, String)> {
    let physical: Vec<&str> = source
        .split_inclusive('\n')
        .map(|l| l.strip_suffix('\n').unwrap_or(l))
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    let logical = scan(&physical)?;
    check_indentation(&logical)?;

    let mut out: Vec<Declaration> = Vec::new();
    // open declarations: (index into out, indent)
    let mut open: Vec<(usize, usize)> = Vec::new();
    for (li, ll) in logical.iter().enumerate() {
        let Some((kind_word, name)) = header_of(&ll.head) else {
            continue;
        };
        let Some((colon_line, colon_col)) = ll.colon else {
            return Err((ll.start, format!("expected ':' after {kind_word} header")));
        };
        let end_line = if ll.inline_body {
            ll.end
        } else {
            let mut end = ll.end;
            for next in &logical[li + 1..] {
                if next.indent <= ll.indent {
                    break;
                }
                end = next.end;
            }
            end
        };

        while let Some(&(idx, indent)) = open.last() {
            if out[idx].end_line < ll.start || indent >= ll.indent {
                open.pop();
            } else {
                break;
            }
        }
        let parent = open.last().map(|&(idx, _)| &out[idx]);
        let kind = match (kind_word, parent.map(|p| p.kind)) {
            ("class", _) => DeclKind::Class,
            (_, Some(DeclKind::Class)) => DeclKind::Method,
            _ => DeclKind::Function,
        };
        let qualified_name = match parent {
            Some(p) => format!("{}.{}", p.qualified_name, name),
            None => name.to_string(),
        };

        let mut sig_lines: Vec<&str> = physical[ll.start - 1..colon_line - 1].to_vec();
        let last = physical[colon_line - 1];
        sig_lines.push(&last[..=colon_col]);
        let signature_text = sig_lines.join("\n");

        out.push(Declaration {
            kind,
            name: name.to_string(),
            qualified_name,
            signature_text,
            start_line: ll.start,
            end_line,
        });
        open.push((out.len() - 1, ll.indent));
    }
    Ok(out)
}

/// Recognizes `def`, `async def` and `class` headers; returns the keyword
/// and the declared name.
fn header_of(head: &str) -> Option<(&'static str, &str)> {
    let (word, rest) = split_word(head)?;
    let (kind, rest) = match word {
        "def" => ("def", rest),
        "class" => ("class", rest),
        "async" => {
            let (w2, r2) = split_word(rest.trim_start())?;
            if w2 != "def" {
                return None;
            }
            ("def", r2)
        }
        _ => return None,
    };
    if !rest.starts_with([' ', '\t']) {
        return None;
    }
    let rest = rest.trim_start();
    let end = rest
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    let name = &rest[..end];
    if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    Some((kind, name))
}

fn split_word(s: &str) -> Option<(&str, &str)> {
    let end = s
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(s.len());
    if end == 0 {
        None
    } else {
        Some((&s[..end], &s[end..]))
    }
}

#[derive(Debug, Clone)]
struct LogicalLine {
    start: usize,
    end: usize,
    indent: usize,
    /// First physical line's text after indentation.
    head: String,
    /// Position of the first colon at bracket depth 0: (1-based line, byte column).
    colon: Option<(usize, usize)>,
    /// Code follows that first colon on the same logical line.
    inline_body: bool,
    /// Last significant character at depth 0 is a colon.
    opens_block: bool,
}

struct StringState {
    quote: char,
    triple: bool,
    start_line: usize,
}

fn indent_width(line: &str) -> usize {
    let mut w = 0;
    for c in line.chars() {
        match c {
            ' ' => w += 1,
            '\t' => w = (w / 8 + 1) * 8,
            '\x0c' => w = 0,
            _ => break,
        }
    }
    w
}

fn scan(physical: &[&str]) -> Result<Vec<LogicalLine>, (usize, String)> {
    let mut out = Vec::new();
    let mut cur: Option<LogicalLine> = None;
    let mut brackets: Vec<(char, usize)> = Vec::new();
    let mut string: Option<StringState> = None;
    let mut last_sig: Option<char> = None;

    for (idx, &line) in physical.iter().enumerate() {
        let lineno = idx + 1;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;

        if cur.is_none() {
            let stripped = line.trim_start_matches([' ', '\t', '\x0c']);
            if stripped.is_empty() || stripped.starts_with('#') {
                continue;
            }
            let offset = line.len() - stripped.len();
            cur = Some(LogicalLine {
                start: lineno,
                end: lineno,
                indent: indent_width(line),
                head: stripped.to_string(),
                colon: None,
                inline_body: false,
                opens_block: false,
            });
            last_sig = None;
            i = chars.iter().position(|&(b, _)| b >= offset).unwrap_or(chars.len());
        }
        let ll = cur.as_mut().expect("logical line open");
        ll.end = lineno;
        let mut continued = false;

        while i < chars.len() {
            let (byte, c) = chars[i];
            if let Some(s) = &string {
                if c == '\\' {
                    i += 2;
                    continue;
                }
                if c == s.quote {
                    if s.triple {
                        if chars.get(i + 1).map(|x| x.1) == Some(c)
                            && chars.get(i + 2).map(|x| x.1) == Some(c)
                        {
                            string = None;
                            i += 3;
                            continue;
                        }
                    } else {
                        string = None;
                    }
                }
                i += 1;
                continue;
            }
            match c {
                '#' => break,
                '\'' | '"' => {
                    let triple = chars.get(i + 1).map(|x| x.1) == Some(c)
                        && chars.get(i + 2).map(|x| x.1) == Some(c);
                    string = Some(StringState { quote: c, triple, start_line: lineno });
                    mark(ll, &brackets, &mut last_sig, c);
                    i += if triple { 3 } else { 1 };
                    continue;
                }
                '(' | '[' | '{' => {
                    mark(ll, &brackets, &mut last_sig, c);
                    brackets.push((c, lineno));
                }
                ')' | ']' | '}' => {
                    let want = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match brackets.pop() {
                        Some((open, _)) if open == want => {}
                        _ => return Err((lineno, format!("unmatched '{c}'"))),
                    }
                    mark(ll, &brackets, &mut last_sig, c);
                }
                '\\' if i + 1 == chars.len() => {
                    continued = true;
                }
                ':' if brackets.is_empty() => {
                    // `:=` is an operator, not a block colon
                    if chars.get(i + 1).map(|x| x.1) == Some('=') {
                        mark(ll, &brackets, &mut last_sig, c);
                        i += 2;
                        continue;
                    }
                    if ll.colon.is_none() {
                        ll.colon = Some((lineno, byte));
                        last_sig = Some(':');
                    } else {
                        mark(ll, &brackets, &mut last_sig, c);
                    }
                }
                c if c.is_whitespace() => {}
                _ => mark(ll, &brackets, &mut last_sig, c),
            }
            i += 1;
        }

        if let Some(s) = &string {
            if !s.triple {
                let ends_escaped = line.ends_with('\\') && {
                    let trailing = line.len() - line.trim_end_matches('\\').len();
                    trailing % 2 == 1
                };
                if !ends_escaped {
                    return Err((s.start_line, "unterminated string literal".into()));
                }
            }
        }
        if string.is_some() || !brackets.is_empty() || continued {
            continue;
        }
        ll.opens_block = last_sig == Some(':');
        out.push(cur.take().expect("logical line open"));
    }

    if let Some(s) = string {
        return Err((s.start_line, "unterminated string literal".into()));
    }
    if let Some((c, line)) = brackets.last() {
        return Err((*line, format!("'{c}' was never closed")));
    }
    if let Some(ll) = cur {
        return Err((ll.end, "unexpected end of file after line continuation".into()));
    }
    Ok(out)
}

/// Records a significant character on the logical line.
fn mark(ll: &mut LogicalLine, brackets: &[(char, usize)], last_sig: &mut Option<char>, c: char) {
    if ll.colon.is_some() && brackets.is_empty() && c != ':' {
        ll.inline_body = true;
    }
    if ll.colon.is_some() && !brackets.is_empty() {
        ll.inline_body = true;
    }
    *last_sig = Some(c);
}

fn check_indentation(lines: &[LogicalLine]) -> Result<(), (usize, String)> {
    let mut stack = vec![0usize];
    let mut expect_indent = false;
    for ll in lines {
        if let (Some((kind_word, _)), None) = (header_of(&ll.head), ll.colon) {
            return Err((ll.start, format!("expected ':' after {kind_word} header")));
        }
        let top = *stack.last().expect("non-empty stack");
        if expect_indent {
            if ll.indent <= top {
                return Err((ll.start, "expected an indented block".into()));
            }
            stack.push(ll.indent);
        } else if ll.indent > top {
            return Err((ll.start, "unexpected indent".into()));
        } else {
            while ll.indent < *stack.last().expect("non-empty stack") {
                stack.pop();
            }
            if ll.indent != *stack.last().expect("non-empty stack") {
                return Err((ll.start, "unindent does not match any outer indentation level".into()));
            }
        }
        expect_indent = ll.opens_block;
    }
    if expect_indent {
        let last = lines.last().map_or(1, |l| l.end);
        return Err((last, "expected an indented block".into()));
    }
    Ok(())
}

/// Renders the skeleton: a `### path` header, then each declaration's
/// signature with an indented `...` under every leaf declaration.
pub fn render_skeleton(skeleton: &FileSkeleton) -> String {
    let mut out = format!("### {}\n", skeleton.path);
    let decls = &skeleton.declarations;
    for (i, d) in decls.iter().enumerate() {
        out.push_str(&d.signature_text);
        out.push('\n');
        let has_child = decls.get(i + 1).is_some_and(|n| d.contains(n.start_line));
        if !has_child {
            let indent: String = d
                .signature_text
                .chars()
                .take_while(|c| *c == ' ' || *c == '\t')
                .collect();
            out.push_str(&indent);
            out.push_str("    ...\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(src: &str) -> Vec<(DeclKind, String, usize, usize)> {
        parse_declarations(src)
            .unwrap()
            .into_iter()
            .map(|d| (d.kind, d.qualified_name, d.start_line, d.end_line))
            .collect()
    }

    #[test]
    fn single_function() {
        assert_eq!(spans("def f():\n    pass\n"), vec![(DeclKind::Function, "f".into(), 1, 2)]);
    }

    #[test]
    fn class_with_method() {
        assert_eq!(
            spans("class A:\n    def m(self):\n        pass\n"),
            vec![
                (DeclKind::Class, "A".into(), 1, 3),
                (DeclKind::Method, "A.m".into(), 2, 3),
            ]
        );
    }

    #[test]
    fn multi_line_signature_and_decorator() {
        let src = "@decorate\ndef f(\n    a,\n    b: dict = {'k': 1},\n) -> int:\n    return a\n";
        let d = parse_declarations(src).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].start_line, d[0].end_line), (2, 6));
        assert_eq!(d[0].signature_text, "def f(\n    a,\n    b: dict = {'k': 1},\n) -> int:");
    }

    #[test]
    fn nested_functions_and_trailing_comments() {
        let src = "def outer():\n    def inner():\n        return 1\n    # trailing\n    return inner\n        # deeper comment\n\nx = 1\n";
        assert_eq!(
            spans(src),
            vec![
                (DeclKind::Function, "outer".into(), 1, 5),
                (DeclKind::Function, "outer.inner".into(), 2, 3),
            ]
        );
    }

    #[test]
    fn strings_hide_keywords_and_colons() {
        let src = "s = '''\ndef fake():\n    pass\n'''\nclass A: pass\nasync def g(x=lambda y: y): return x\n";
        assert_eq!(
            spans(src),
            vec![
                (DeclKind::Class, "A".into(), 5, 5),
                (DeclKind::Function, "g".into(), 6, 6),
            ]
        );
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(parse_declarations("def f(:\n    pass\n").is_err());
        assert!(parse_declarations("def f():\nreturn 1\n").is_err());
        assert!(parse_declarations("def f():\n        a = 1\n    b = 2\n").is_err());
        assert!(parse_declarations("x = 'abc\n").is_err());
        assert!(parse_declarations("def f()\n    pass\n").is_err());
        assert!(parse_declarations("x = (1,\n").is_err());
    }

    #[test]
    fn enclosing_lookup() {
        let s = parse_file("a.py", "class A:\n    x = 1\n    def m(self):\n        pass\n\ny = 2\n").unwrap();
        assert_eq!(s.enclosing_declaration(4), "A.m");
        assert_eq!(s.enclosing_declaration(2), "A");
        assert_eq!(s.enclosing_declaration(1), "A");
        assert_eq!(s.enclosing_declaration(6), MODULE_LEVEL);
    }

    #[test]
    fn render_examples() {
        let s = parse_file("a.py", "def f():\n    pass\n").unwrap();
        assert_eq!(render_skeleton(&s), "### a.py\ndef f():\n    ...\n");
        let s = parse_file("a.py", "class A:\n    def m(self):\n        pass\n").unwrap();
        assert_eq!(render_skeleton(&s), "### a.py\nclass A:\n    def m(self):\n        ...\n");
        let s = parse_file("a.py", "").unwrap();
        assert_eq!(render_skeleton(&s), "### a.py\n");
    }

    #[test]
    fn module_runs() {
        let src = "import os\n\ndef f():\n    pass\n\nX = 1\nY = 2\n";
        let s = parse_file("a.py", src).unwrap();
        assert_eq!(s.module_level_runs(src), vec![(1, 2), (5, 7)]);
        assert_eq!(s.module_run_at(6), Some((5, 7)));
        assert_eq!(s.module_run_at(4), None);
    }
}
