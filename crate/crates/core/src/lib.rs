//! Repository-structure-aware training data for issue resolution.
//!
//! The crate turns merged pull requests and the issues they resolve into
//! multi-level localization samples (file, function, line) and
//! Search/Replace code-edit samples, and scores localization predictions
//! against labels derived from each pull request's diff.
//!
//! Module map:
//!
//! - [`ingest`]: repository selection, hosting-service scraping with an
//!   on-disk cache, and pull-request/issue linking.
//! - [`repostruct`]: filtered repository trees and their text rendering.
//! - [`skeleton`]: Python declaration spans and file skeletons.
//! - [`diffmap`]: unified diff parsing, patch application, and gold labels.
//! - [`editfmt`]: the Search/Replace edit format.
//! - [`retrieval`]: BM25 file retrieval.
//! - [`metrics`]: localization hit rates.
//! - [`samplegen`] and [`dataset`]: training sample assembly and JSONL output.
//! - [`pipeline`]: evaluation drivers with pluggable predictors.

pub mod dataset;
pub mod diffmap;
pub mod editfmt;
pub mod exclusion;
pub mod ingest;
pub mod lcs;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod repostruct;
pub mod retrieval;
pub mod samplegen;
pub mod skeleton;
pub mod snapshot;
pub mod task;
pub mod text;

pub use exclusion::ExclusionRules;
pub use par::Parallelism;

/// Sentinel qualified name for lines that sit outside every declaration.
pub const MODULE_LEVEL: &str = "<module-level>";
