//! BM25 retrieval of repository files for an issue description.
//!
//! Okapi BM25 with `idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)`. Query
//! tokens are summed as a list, so a term repeated in the query counts once
//! per repetition.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RetrievalError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
}

/// Splits on non-alphanumeric characters, then at camelCase and acronym
/// boundaries, and lowercases. Digits stay attached to the letters before
/// them.
pub fn tokenize_code(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let c = chars[i];
            let lower_to_upper = (prev.is_lowercase() || prev.is_numeric()) && c.is_uppercase();
            let acronym_end = prev.is_uppercase()
                && c.is_uppercase()
                && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if lower_to_upper || acronym_end {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    pub doc_ids: Vec<String>,
    pub doc_len: Vec<usize>,
    pub avg_len: f64,
    pub df: BTreeMap<String, usize>,
    /// term -> (doc index -> count)
    pub tf: BTreeMap<String, BTreeMap<usize, usize>>,
    pub k1: f64,
    pub b: f64,
}

impl Bm25Index {
    /// Indexes `docs`; document order is the map's (sorted) key order.
    pub fn build(docs: &BTreeMap<String, String>, k1: f64, b: f64) -> Result<Self, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_len = Vec::with_capacity(docs.len());
        let mut tf: BTreeMap<String, BTreeMap<usize, usize>> = BTreeMap::new();
        for (i, (path, text)) in docs.iter().enumerate() {
            let terms = tokenize_code(text);
            doc_ids.push(path.clone());
            doc_len.push(terms.len());
            for t in terms {
                *tf.entry(t).or_default().entry(i).or_default() += 1;
            }
        }
        let df = tf.iter().map(|(t, postings)| (t.clone(), postings.len())).collect();
        let avg_len = doc_len.iter().sum::<usize>() as f64 / doc_len.len() as f64;
        Ok(Self { doc_ids, doc_len, avg_len, df, tf, k1, b })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Score of every document with at least one query term.
    pub fn scores(&self, query: &str) -> HashMap<usize, f64> {
        let mut scores: HashMap<usize, f64> = HashMap::new();
        let norm_avg = if self.avg_len > 0.0 { self.avg_len } else { 1.0 };
        for term in tokenize_code(query) {
            let Some(postings) = self.tf.get(&term) else { continue };
            let idf = self.idf(&term);
            for (&doc, &count) in postings {
                let tf = count as f64;
                let len_norm = 1.0 - self.b + self.b * self.doc_len[doc] as f64 / norm_avg;
                *scores.entry(doc).or_default() += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * len_norm);
            }
        }
        scores
    }

    /// Top `k` documents by descending score, ties by path ascending.
    /// Documents sharing no term with the query are never returned.
    pub fn query_top_k(&self, issue_text: &str, k: usize) -> Vec<(String, f64)> {
        let mut ranked: Vec<(String, f64)> = self
            .scores(issue_text)
            .into_iter()
            .filter(|(_, s)| *s > 0.0)
            .map(|(d, s)| (self.doc_ids[d].clone(), s))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }
}
