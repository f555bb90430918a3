//! Small line and substring helpers shared by the diff and edit engines.

/// Splits `text` into lines, each keeping its trailing `\n` (the last line
/// may lack one).
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

/// Byte offsets of every occurrence of `needle` in `haystack`, overlapping
/// occurrences included.
pub fn find_all(haystack: &str, needle: &str) -> Vec<usize> {
    if needle.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let at = from + pos;
        out.push(at);
        // advance by one char so overlapping matches are counted
        let step = haystack[at..].chars().next().map_or(1, char::len_utf8);
        from = at + step;
        if from > haystack.len() {
            break;
        }
    }
    out
}

/// Number of occurrences of `needle` in `haystack`, overlapping included.
pub fn count_occurrences(haystack: &str, needle: &str) -> usize {
    find_all(haystack, needle).len()
}

/// Normalizes a repository-relative path: `\` becomes `/`, and leading
/// `./` and `/` are dropped.
pub fn normalize_path(path: &str) -> String {
    let mut p = path.trim().replace('\\', "/");
    while let Some(rest) = p.strip_prefix("./") {
        p = rest.to_string();
    }
    p.trim_start_matches('/').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_keeps_terminators() {
        assert_eq!(split_lines("a\nb"), vec!["a\n", "b"]);
        assert_eq!(split_lines("a\n"), vec!["a\n"]);
        assert!(split_lines("").is_empty());
    }

    #[test]
    fn overlapping_occurrences_are_counted() {
        assert_eq!(count_occurrences("a\na\na\n", "a\na\n"), 2);
        assert_eq!(count_occurrences("xyz", "q"), 0);
        assert_eq!(count_occurrences("ééé", "éé"), 2);
    }

    #[test]
    fn paths_normalize() {
        assert_eq!(normalize_path("./pkg\\core.py"), "pkg/core.py");
        assert_eq!(normalize_path("/a.py"), "a.py");
    }
}
