//! Hosting-service API access behind a transparent on-disk cache.
//!
//! Every response is persisted under `<cache>/<owner>__<name>/` before it is
//! used, so a warm cache answers every request of a later run. In offline
//! mode the network is never touched and the first missing entry is an
//! error.

use super::{extract_issue_refs, license_allows_use, IssueRecord, PullRequest, RepoRecord};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};
use thiserror::Error;

pub const TOKEN_ENV: &str = "RESAT_API_TOKEN";

const JSON_ACCEPT: &str = "application/vnd.github+json";
const DIFF_ACCEPT: &str = "application/vnd.github.v3.diff";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("rate limited at {url}; retry after {retry_after_secs}s")]
    RateLimited { url: String, retry_after_secs: u64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("offline mode and no cache entry at {0}")]
    OfflineCacheMiss(PathBuf),
    #[error("http status {status} from {url}")]
    Http { status: u16, url: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cache io at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unexpected response in {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
    pub retry_after: Option<Duration>,
}

/// One GET against the hosting service. Implementations must not retry;
/// retries are handled by the caller.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, accept: &str) -> Result<Response, FetchError>;
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub base_url: String,
    pub per_page: usize,
    pub max_retries: u32,
    /// Upper bound on a single honored retry-after wait.
    pub max_wait: Duration,
    pub offline: bool,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.github.com".into(),
            per_page: 100,
            max_retries: 3,
            max_wait: Duration::from_secs(120),
            offline: false,
        }
    }
}

/// Serializes requests to one host and spaces them by a minimum interval.
#[derive(Debug)]
pub struct RateGate {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateGate {
    pub fn new(min_interval: Duration) -> Self {
        Self { min_interval, last: Mutex::new(None) }
    }

    /// Runs `f` while holding the gate.
    pub fn pass<T>(&self, f: impl FnOnce() -> T) -> T {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let since = prev.elapsed();
            if since < self.min_interval {
                std::thread::sleep(self.min_interval - since);
            }
        }
        let out = f();
        *last = Some(Instant::now());
        out
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    token: Option<String>,
    gate: RateGate,
}

impl HttpTransport {
    pub fn new(token: Option<String>, min_interval: Duration, timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            token,
            gate: RateGate::new(min_interval),
        }
    }

    /// Reads the token from the environment.
    pub fn from_env() -> Self {
        Self::new(std::env::var(TOKEN_ENV).ok(), Duration::from_millis(250), Duration::from_secs(60))
    }
}

fn retry_after(resp: &ureq::Response) -> Option<Duration> {
    if let Some(secs) = resp.header("retry-after").and_then(|v| v.trim().parse::<u64>().ok()) {
        return Some(Duration::from_secs(secs));
    }
    if resp.header("x-ratelimit-remaining") == Some("0") {
        let reset = resp.header("x-ratelimit-reset")?.trim().parse::<u64>().ok()?;
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok()?.as_secs();
        return Some(Duration::from_secs(reset.saturating_sub(now).max(1)));
    }
    None
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, accept: &str) -> Result<Response, FetchError> {
        self.gate.pass(|| {
            let mut req = self.agent.get(url).set("Accept", accept).set("User-Agent", "resat");
            if let Some(t) = &self.token {
                req = req.set("Authorization", &format!("Bearer {t}"));
            }
            let resp = match req.call() {
                Ok(r) => r,
                Err(ureq::Error::Status(_, r)) => r,
                Err(e) => return Err(FetchError::Transport(e.to_string())),
            };
            let status = resp.status();
            let retry_after = retry_after(&resp);
            let body = resp.into_string().map_err(|e| FetchError::Transport(e.to_string()))?;
            Ok(Response { status, body, retry_after })
        })
    }
}

/// Refuses every request; pairs with offline mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoNetwork;

impl Transport for NoNetwork {
    fn get(&self, url: &str, _accept: &str) -> Result<Response, FetchError> {
        Err(FetchError::Transport(format!("network disabled, refused {url}")))
    }
}

/// GET with retry-after handling for 429 and rate-limited 403 responses.
fn get_with_retries(transport: &dyn Transport, api: &ApiConfig, url: &str, accept: &str) -> Result<String, FetchError> {
    let mut attempt = 0;
    loop {
        let resp = transport.get(url, accept)?;
        match resp.status {
            200..=299 => return Ok(resp.body),
            404 | 410 => return Err(FetchError::NotFound(url.to_string())),
            429 | 403 if resp.status == 429 || resp.retry_after.is_some() => {
                let wait = resp.retry_after.unwrap_or(Duration::from_secs(1));
                if attempt >= api.max_retries || wait > api.max_wait {
                    return Err(FetchError::RateLimited { url: url.to_string(), retry_after_secs: wait.as_secs() });
                }
                log::warn!("rate limited at {url}, waiting {}s", wait.as_secs());
                std::thread::sleep(wait);
                attempt += 1;
            }
            status => return Err(FetchError::Http { status, url: url.to_string() }),
        }
    }
}

/// Per-repository cache directory plus the network fallback.
pub struct ApiCache<'a> {
    dir: PathBuf,
    api: &'a ApiConfig,
    transport: &'a dyn Transport,
}

impl<'a> ApiCache<'a> {
    pub fn new(cache_root: &Path, repo_slug: &str, api: &'a ApiConfig, transport: &'a dyn Transport) -> Self {
        Self { dir: cache_root.join(repo_slug), api, transport }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Cached body at `rel`, fetching and persisting it on a miss. A 404 is
    /// stored as `null` when `remember_missing` is set, so later runs do not
    /// ask again.
    pub fn resource(&self, rel: &str, url: &str, accept: &str, remember_missing: bool) -> Result<String, FetchError> {
        let path = self.dir.join(rel);
        match std::fs::read_to_string(&path) {
            Ok(body) => return Ok(body),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => return Err(FetchError::Io { path, source }),
        }
        if self.api.offline {
            return Err(FetchError::OfflineCacheMiss(path));
        }
        let body = match get_with_retries(self.transport, self.api, url, accept) {
            Ok(b) => b,
            Err(FetchError::NotFound(_)) if remember_missing => "null".to_string(),
            Err(e) => return Err(e),
        };
        write_atomic(&path, &body)?;
        Ok(body)
    }

    fn json(&self, rel: &str, url: &str, remember_missing: bool) -> Result<Value, FetchError> {
        let body = self.resource(rel, url, JSON_ACCEPT, remember_missing)?;
        serde_json::from_str(&body).map_err(|e| FetchError::Malformed { path: self.dir.join(rel), reason: e.to_string() })
    }

    fn malformed(&self, rel: &str, reason: &str) -> FetchError {
        FetchError::Malformed { path: self.dir.join(rel), reason: reason.to_string() }
    }
}

/// Write to a sibling temp file, then rename over the target.
fn write_atomic(path: &Path, body: &str) -> Result<(), FetchError> {
    let io = |source| FetchError::Io { path: path.to_path_buf(), source };
    let parent = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
    tmp.write_all(body.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn str_at<'v>(v: &'v Value, pointer: &str) -> Option<&'v str> {
    v.pointer(pointer).and_then(Value::as_str)
}

/// Star count, pull-request count, default branch and license of a repository.
pub fn fetch_repo_meta(
    owner: &str,
    name: &str,
    api: &ApiConfig,
    transport: &dyn Transport,
    cache_dir: &Path,
) -> Result<RepoRecord, FetchError> {
    let mut rec = RepoRecord::new(owner, name);
    let cache = ApiCache::new(cache_dir, &rec.slug(), api, transport);
    let base = format!("{}/repos/{owner}/{name}", api.base_url);
    let meta = cache.json("repo.json", &base, false)?;
    rec.star_count = meta
        .get("stargazers_count")
        .and_then(Value::as_u64)
        .ok_or_else(|| cache.malformed("repo.json", "missing stargazers_count"))?;
    rec.default_branch = str_at(&meta, "/default_branch")
        .ok_or_else(|| cache.malformed("repo.json", "missing default_branch"))?
        .to_string();
    rec.license_allows_use = license_allows_use(str_at(&meta, "/license/spdx_id"));
    let count_url = format!("{}/search/issues?q=repo:{owner}/{name}+is:pr&per_page=1", api.base_url);
    let count = cache.json("pr_count.json", &count_url, false)?;
    rec.pr_count = count
        .get("total_count")
        .and_then(Value::as_u64)
        .ok_or_else(|| cache.malformed("pr_count.json", "missing total_count"))?;
    Ok(rec)
}

fn pr_numbers(cache: &ApiCache, repo: &RepoRecord, api: &ApiConfig) -> Result<BTreeSet<u64>, FetchError> {
    let mut numbers = BTreeSet::new();
    for page in 1.. {
        let rel = format!("list/page-{page}.json");
        let url = format!(
            "{}/repos/{}/{}/pulls?state=closed&per_page={}&page={page}",
            api.base_url, repo.owner, repo.name, api.per_page
        );
        let listing = cache.json(&rel, &url, false)?;
        let items = listing.as_array().ok_or_else(|| cache.malformed(&rel, "expected an array"))?;
        for item in items {
            let n = item.get("number").and_then(Value::as_u64).ok_or_else(|| cache.malformed(&rel, "missing number"))?;
            numbers.insert(n);
        }
        if items.len() < api.per_page {
            break;
        }
    }
    Ok(numbers)
}

fn fetch_pull(cache: &ApiCache, repo: &RepoRecord, api: &ApiConfig, number: u64) -> Result<PullRequest, FetchError> {
    let rel = format!("prs/{number}.json");
    let base = format!("{}/repos/{}/{}", api.base_url, repo.owner, repo.name);
    let path = cache.dir().join(&rel);
    let envelope: Value = match std::fs::read_to_string(&path) {
        Ok(body) => serde_json::from_str(&body).map_err(|e| cache.malformed(&rel, &e.to_string()))?,
        Err(_) if api.offline => return Err(FetchError::OfflineCacheMiss(path)),
        Err(_) => {
            let get = |url: &str| -> Result<Value, FetchError> {
                let body = get_with_retries(cache.transport, api, url, JSON_ACCEPT)?;
                serde_json::from_str(&body).map_err(|e| cache.malformed(&rel, &e.to_string()))
            };
            let pull = get(&format!("{base}/pulls/{number}"))?;
            let commits = get(&format!("{base}/pulls/{number}/commits?per_page=100"))?;
            let merged = pull.get("merged").and_then(Value::as_bool).unwrap_or(false);
            let merge_commit = match str_at(&pull, "/merge_commit_sha") {
                Some(sha) if merged => get(&format!("{base}/commits/{sha}"))?,
                _ => Value::Null,
            };
            let env = serde_json::json!({ "pull": pull, "commits": commits, "merge_commit": merge_commit });
            let body = serde_json::to_string_pretty(&env).map_err(|e| cache.malformed(&rel, &e.to_string()))?;
            write_atomic(&path, &body)?;
            env
        }
    };
    let pull = envelope.get("pull").ok_or_else(|| cache.malformed(&rel, "missing pull"))?;
    let merged = pull.get("merged").and_then(Value::as_bool).unwrap_or(false);
    let commit_messages = envelope
        .get("commits")
        .and_then(Value::as_array)
        .map(|cs| cs.iter().filter_map(|c| str_at(c, "/commit/message")).map(str::to_string).collect())
        .unwrap_or_default();
    let (merge_commit_sha, parent_sha, diff_text) = if merged {
        let sha = str_at(pull, "/merge_commit_sha").ok_or_else(|| cache.malformed(&rel, "merged without sha"))?;
        let parent = str_at(&envelope, "/merge_commit/parents/0/sha")
            .ok_or_else(|| cache.malformed(&rel, "merge commit has no parent"))?;
        let diff = cache.resource(&format!("diffs/{number}.patch"), &format!("{base}/pulls/{number}"), DIFF_ACCEPT, false)?;
        (sha.to_string(), parent.to_string(), diff)
    } else {
        (String::new(), String::new(), String::new())
    };
    Ok(PullRequest {
        number,
        title: str_at(pull, "/title").unwrap_or_default().to_string(),
        body: str_at(pull, "/body").unwrap_or_default().to_string(),
        merged,
        base_ref: str_at(pull, "/base/ref").unwrap_or_default().to_string(),
        merge_commit_sha,
        parent_sha,
        commit_messages,
        diff_text,
    })
}

/// All closed pull requests of `repo` and every issue referenced by a PR
/// merged into the default branch. Issues that do not exist, or that turn
/// out to be pull requests, are left out of the map.
pub fn fetch_repo_data(
    repo: &RepoRecord,
    api: &ApiConfig,
    transport: &dyn Transport,
    cache_dir: &Path,
) -> Result<(Vec<PullRequest>, BTreeMap<u64, IssueRecord>), FetchError> {
    let cache = ApiCache::new(cache_dir, &repo.slug(), api, transport);
    let mut prs = Vec::new();
    for n in pr_numbers(&cache, repo, api)? {
        prs.push(fetch_pull(&cache, repo, api, n)?);
    }
    let wanted: BTreeSet<u64> = prs
        .iter()
        .filter(|p| p.merged && p.base_ref == repo.default_branch)
        .flat_map(|p| extract_issue_refs(&p.title, &p.commit_messages))
        .collect();
    let mut issues = BTreeMap::new();
    for n in wanted {
        let rel = format!("issues/{n}.json");
        let url = format!("{}/repos/{}/{}/issues/{n}", api.base_url, repo.owner, repo.name);
        let v = cache.json(&rel, &url, true)?;
        if v.is_null() || v.get("pull_request").is_some() {
            continue;
        }
        issues.insert(
            n,
            IssueRecord {
                number: n,
                title: str_at(&v, "/title").unwrap_or_default().to_string(),
                body: str_at(&v, "/body").unwrap_or_default().to_string(),
            },
        );
    }
    Ok((prs, issues))
}
