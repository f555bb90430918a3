//! Filtered repository trees and their indented text rendering.

use crate::exclusion::ExclusionRules;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Dir,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// Directories first, then files, each group sorted by name.
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoTree {
    pub root: Node,
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("path not found: {0}")]
    PathNotFound(String),
    #[error("unparseable tree rendering at line {0}")]
    BadRendering(usize),
}

#[derive(Default)]
struct Builder {
    dirs: BTreeMap<String, Builder>,
    files: Vec<String>,
}

impl Builder {
    fn insert(&mut self, parts: &[&str]) {
        match parts {
            [] => {}
            [file] => {
                if !self.files.iter().any(|f| f == file) {
                    self.files.push(file.to_string());
                }
            }
            [dir, rest @ ..] => self.dirs.entry(dir.to_string()).or_default().insert(rest),
        }
    }

    fn into_node(mut self, name: String) -> Node {
        self.files.sort();
        let mut children: Vec<Node> = self
            .dirs
            .into_iter()
            .map(|(n, b)| b.into_node(n))
            .collect();
        children.extend(self.files.into_iter().map(|f| Node {
            name: f,
            kind: NodeKind::File,
            children: Vec::new(),
        }));
        Node { name, kind: NodeKind::Dir, children }
    }
}

impl RepoTree {
    /// Builds a tree from repository-relative `/`-separated paths, keeping
    /// only those `rules` admit. Directories only exist when they hold an
    /// admitted file, so empty directories never appear.
    pub fn from_paths<'a, I>(root_name: &str, paths: I, rules: &ExclusionRules) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut b = Builder::default();
        for p in paths {
            if rules.admits(p) {
                let parts: Vec<&str> = p.split('/').filter(|s| !s.is_empty()).collect();
                b.insert(&parts);
            }
        }
        RepoTree { root: b.into_node(root_name.to_string()) }
    }

    /// Every file path in the tree, sorted.
    pub fn file_paths(&self) -> Vec<String> {
        fn walk(n: &Node, prefix: &str, out: &mut Vec<String>) {
            for c in &n.children {
                let p = if prefix.is_empty() { c.name.clone() } else { format!("{prefix}/{}", c.name) };
                match c.kind {
                    NodeKind::File => out.push(p),
                    NodeKind::Dir => walk(c, &p, out),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, "", &mut out);
        out.sort();
        out
    }

    /// Two-space indentation per depth, `/` after directory names, root on
    /// the first line.
    pub fn render(&self) -> String {
        fn walk(n: &Node, depth: usize, out: &mut String) {
            for _ in 0..depth {
                out.push_str("  ");
            }
            out.push_str(&n.name);
            if n.kind == NodeKind::Dir {
                out.push('/');
            }
            out.push('\n');
            for c in &n.children {
                walk(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        walk(&self.root, 0, &mut out);
        out
    }

    /// Inverse of [`RepoTree::render`].
    pub fn parse_rendering(text: &str) -> Result<Self, TreeError> {
        // stack of (depth, node)
        let mut stack: Vec<(usize, Node)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim_start_matches(' ');
            let spaces = line.len() - trimmed.len();
            if spaces % 2 != 0 || trimmed.is_empty() {
                return Err(TreeError::BadRendering(i + 1));
            }
            let depth = spaces / 2;
            let node = match trimmed.strip_suffix('/') {
                Some(n) => Node { name: n.to_string(), kind: NodeKind::Dir, children: Vec::new() },
                None => Node { name: trimmed.to_string(), kind: NodeKind::File, children: Vec::new() },
            };
            if (stack.is_empty() && depth != 0) || (!stack.is_empty() && depth == 0) {
                return Err(TreeError::BadRendering(i + 1));
            }
            while stack.len() > depth {
                let (_, done) = stack.pop().expect("non-empty");
                match stack.last_mut() {
                    Some((_, parent)) => parent.children.push(done),
                    None => return Err(TreeError::BadRendering(i + 1)),
                }
            }
            if stack.len() != depth || stack.last().is_some_and(|(_, p)| p.kind != NodeKind::Dir) {
                return Err(TreeError::BadRendering(i + 1));
            }
            stack.push((depth, node));
        }
        while stack.len() > 1 {
            let (_, done) = stack.pop().expect("non-empty");
            stack.last_mut().expect("parent").1.children.push(done);
        }
        let (_, root) = stack.pop().ok_or(TreeError::BadRendering(0))?;
        Ok(RepoTree { root })
    }
}

/// Walks a checked-out snapshot and builds its filtered tree. The root node
/// takes the directory's own name.
pub fn build_tree(snapshot_root: &Path, rules: &ExclusionRules) -> Result<RepoTree, TreeError> {
    if !snapshot_root.is_dir() {
        return Err(TreeError::PathNotFound(snapshot_root.display().to_string()));
    }
    let name = snapshot_root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let paths = relative_files(snapshot_root);
    Ok(RepoTree::from_paths(&name, paths.iter().map(String::as_str), rules))
}

/// Repository-relative file paths under `root`, skipping hidden directories.
pub fn relative_files(root: &Path) -> Vec<String> {
    let mut out: Vec<String> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !(e.file_type().is_dir() && e.file_name().to_string_lossy().starts_with('.')))
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .filter_map(|e| {
            e.path()
                .strip_prefix(root)
                .ok()
                .map(|p| p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"))
        })
        .collect();
    out.sort();
    out
}
