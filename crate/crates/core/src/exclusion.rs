//! Which repository paths count as analyzable source.
//!
//! One [`ExclusionRules`] value is shared by the tree builder, the gold-label
//! extractor and the retrieval corpus so the three always agree.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionRules {
    /// Directory names that mark everything beneath them as test code.
    pub test_path_components: BTreeSet<String>,
    /// Basename patterns (`*` wildcard only) that mark a file as a test script.
    pub test_basename_globs: Vec<String>,
    pub allowed_extension: String,
}

impl Default for ExclusionRules {
    fn default() -> Self {
        Self {
            test_path_components: ["test", "tests", "testing"]
                .into_iter()
                .map(String::from)
                .collect(),
            test_basename_globs: vec![
                "test_*.py".to_string(),
                "*_test.py".to_string(),
                "conftest.py".to_string(),
            ],
            allowed_extension: ".py".to_string(),
        }
    }
}

impl ExclusionRules {
    pub fn is_source(&self, path: &str) -> bool {
        path.ends_with(&self.allowed_extension)
    }

    pub fn is_test_script(&self, path: &str) -> bool {
        let parts: Vec<&str> = path.split('/').collect();
        let (base, dirs) = match parts.split_last() {
            Some(x) => x,
            None => return false,
        };
        dirs.iter().any(|d| self.test_path_components.contains(*d))
            || self.test_basename_globs.iter().any(|g| glob_match(g, base))
    }

    /// True when some directory component starts with `.`.
    pub fn in_hidden_dir(&self, path: &str) -> bool {
        let parts: Vec<&str> = path.split('/').collect();
        parts[..parts.len().saturating_sub(1)]
            .iter()
            .any(|d| d.starts_with('.'))
    }

    /// A path is admitted when it is a non-test source file outside hidden
    /// directories.
    pub fn admits(&self, path: &str) -> bool {
        self.is_source(path) && !self.is_test_script(path) && !self.in_hidden_dir(path)
    }
}

/// Matches `name` against a pattern where `*` stands for any run of chars.
fn glob_match(pattern: &str, name: &str) -> bool {
    let pieces: Vec<&str> = pattern.split('*').collect();
    if pieces.len() == 1 {
        return pattern == name;
    }
    let first = pieces[0];
    let last = pieces[pieces.len() - 1];
    if !name.starts_with(first) || name.len() < first.len() + last.len() {
        return false;
    }
    if !name.ends_with(last) {
        return false;
    }
    let mut rest = &name[first.len()..name.len() - last.len()];
    for mid in &pieces[1..pieces.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    true
}
