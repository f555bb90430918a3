//! Acceptance checks over the checked-in toy corpus and seeded random
//! inputs. Prints one PASS/FAIL line per criterion and exits non-zero when
//! any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resat_core::dataset::{build_dataset, load_tasks, select_corpus, task_context, SelectConfig};
use resat_core::diffmap::{apply_patch, gold_labels, parse_unified_diff, GoldLocalization};
use resat_core::editfmt::{apply_edits, parse_edits, serialize_edits, to_unified_diff, EditScript};
use resat_core::ingest::{select_repos, ExcludedReason, LinkedTask, NoNetwork, RepoRecord, ApiConfig};
use resat_core::pipeline::{evaluate, Driver, EditOutcome, PredictorChoice, RagParams};
use resat_core::retrieval::Bm25Index;
use resat_core::samplegen::{write_jsonl, ApproxCounter, SampleConfig};
use resat_core::skeleton::parse_file;
use resat_core::snapshot::DirSnapshots;
use resat_core::{ExclusionRules, Parallelism};
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    }};
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn toy() -> PathBuf {
    fixtures().join("toy")
}

fn offline() -> ApiConfig {
    ApiConfig { offline: true, ..ApiConfig::default() }
}

fn toy_tasks() -> Result<Vec<LinkedTask>, String> {
    let sel = select_corpus(&toy(), &SelectConfig::default(), &offline(), &NoNetwork).map_err(|e| e.to_string())?;
    load_tasks(&toy(), &sel, &offline(), &NoNetwork).map_err(|e| e.to_string())
}

fn resat(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_resat")).args(args).output().map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// 1

fn golden_dataset() -> Check {
    let start = Instant::now();
    let tasks = toy_tasks()?;
    let out = build_dataset(
        &tasks,
        &DirSnapshots::new(toy()),
        &ExclusionRules::default(),
        &SampleConfig::default(),
        &ApproxCounter,
        Parallelism::Auto,
    );
    let mut data = Vec::new();
    write_jsonl(&mut data, &out.samples).map_err(|e| e.to_string())?;
    let mut report = serde_json::to_vec_pretty(&out.report).map_err(|e| e.to_string())?;
    report.push(b'\n');
    let golden = fixtures().join("golden");
    ensure!(data == read(&golden.join("toy.jsonl"))?, "library build differs from toy.jsonl");
    ensure!(report == read(&golden.join("toy_report.json"))?, "run report differs from toy_report.json");

    let tally: Vec<usize> = ["FileLoc", "FuncLoc", "LineLoc", "CodeEdit"]
        .iter()
        .map(|k| out.report.samples_per_kind.get(*k).copied().unwrap_or(0))
        .collect();
    ensure!(tally == [14, 13, 12, 12], "per-kind counts {tally:?}");
    let mut per_repo: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &out.samples {
        *per_repo.entry(&s.meta.repo).or_default() += 1;
    }
    let repos: Vec<(&str, usize)> = per_repo.into_iter().collect();
    ensure!(
        repos == [("acme/cfgparse", 15), ("acme/geomlib", 20), ("acme/textkit", 16)],
        "per-repo counts {repos:?}"
    );

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path().join("d.jsonl");
    let r = dir.path().join("r.json");
    let toy = toy();
    let o = resat(&["build", "--fixtures", toy.to_str().unwrap(), "--out", d.to_str().unwrap(), "--report", r.to_str().unwrap()])?;
    ensure!(o.status.success(), "cli build failed: {}", String::from_utf8_lossy(&o.stderr));
    ensure!(read(&d)? == data && read(&r)? == report, "cli build differs from golden files");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("{} tasks, 51 samples (14/13/12/12), {:.2}s", tasks.len(), elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 2 and 3: random line-edit pairs

const VOCAB: &[&str] = &[
    "",
    "pass",
    "x = 1",
    "    return x",
    "def f(a, b):",
    "    y = a + b",
    "# comment",
    "class K:",
    "        self.v = None",
    "    \"\"\"doc\"\"\"",
];

struct EditCase {
    before: BTreeMap<String, String>,
    after: BTreeMap<String, String>,
}

fn render_lines(lines: &[usize], final_newline: bool) -> String {
    let mut s = lines.iter().map(|&i| VOCAB[i]).collect::<Vec<_>>().join("\n");
    if final_newline && !lines.is_empty() {
        s.push('\n');
    }
    s
}

fn random_file(rng: &mut ChaCha8Rng) -> (String, String) {
    let n = rng.gen_range(0..40);
    let before: Vec<usize> = (0..n).map(|_| rng.gen_range(0..VOCAB.len())).collect();
    let mut after = before.clone();
    for _ in 0..rng.gen_range(1..6) {
        let at = rng.gen_range(0..=after.len());
        let del = rng.gen_range(0..4).min(after.len() - at);
        let ins: Vec<usize> = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..VOCAB.len())).collect();
        after.splice(at..at + del, ins);
    }
    let nl = rng.gen_bool(0.9);
    let nl_after = if rng.gen_bool(0.1) { !nl } else { nl };
    (render_lines(&before, nl), render_lines(&after, nl_after))
}

fn edit_cases() -> Vec<EditCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..10_000)
        .map(|_| {
            let mut before = BTreeMap::new();
            let mut after = BTreeMap::new();
            for f in 0..rng.gen_range(1..=2) {
                let (b, a) = random_file(&mut rng);
                before.insert(format!("pkg/m{f}.py"), b);
                after.insert(format!("pkg/m{f}.py"), a);
            }
            EditCase { before, after }
        })
        .collect()
}

fn edit_round_trip(cases: &[EditCase]) -> Check {
    let start = Instant::now();
    let mut failures = 0;
    let mut blocks = 0;
    let mut not_unique = 0;
    for c in cases {
        let script = serialize_edits(&c.before, &c.after);
        let wire = parse_edits(&script.render());
        let ok = apply_edits(&c.before, &script).is_ok_and(|r| r == c.after)
            && wire.is_ok_and(|w| apply_edits(&c.before, &w).is_ok_and(|r| r == c.after));
        failures += usize::from(!ok);

        let mut current = c.before.clone();
        for e in &script.edits {
            blocks += 1;
            let text = &current[&e.path];
            if !(text.is_empty() && e.search.is_empty()) && text.matches(e.search.as_str()).count() != 1 {
                not_unique += 1;
            }
            match apply_edits(&current, &EditScript { edits: vec![e.clone()] }) {
                Ok(next) => current = next,
                Err(_) => break,
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(failures == 0, "{failures} of {} cases failed to round-trip", cases.len());
    ensure!(not_unique == 0, "{not_unique} of {blocks} search blocks were not unique");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{} cases, {blocks} search blocks, 0 failures, {:.2}s", cases.len(), elapsed.as_secs_f64()))
}

fn read_tree(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).into_iter().flatten().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if let Ok(text) = std::fs::read_to_string(&p) {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, text);
            }
        }
    }
    out
}

fn diff_round_trip(cases: &[EditCase]) -> Check {
    let mut failures = 0;
    for c in cases {
        let diff = to_unified_diff(&c.before, &c.after, 3);
        let ok = parse_unified_diff(&diff)
            .ok()
            .and_then(|d| apply_patch(&c.before, &d).ok())
            .is_some_and(|r| r == c.after);
        failures += usize::from(!ok);
    }
    ensure!(failures == 0, "{failures} of {} generated diffs did not reproduce `after`", cases.len());

    let tasks = toy_tasks()?;
    for t in &tasks {
        let base = toy().join(t.repo.slug());
        let before = read_tree(&base.join("snapshots").join(&t.pr.parent_sha));
        let post = read_tree(&base.join("post").join(t.pr.number.to_string()));
        let diffs = parse_unified_diff(&t.pr.diff_text).map_err(|e| format!("{}: {e}", t.task_id()))?;
        let patched = apply_patch(&before, &diffs).map_err(|e| format!("{}: {e}", t.task_id()))?;
        for (path, text) in &patched {
            let want = post.get(path).or_else(|| before.get(path));
            ensure!(want == Some(text), "{}: {path} differs from post-merge contents", t.task_id());
        }
        ensure!(post.keys().all(|p| patched.contains_key(p)), "{}: a post-merge file is missing", t.task_id());
    }
    Ok(format!("{} generated diffs and {} fixture PR diffs reproduce post-merge text", cases.len(), tasks.len()))
}

// ---------------------------------------------------------------------------
// 4

fn brute_force_bm25(docs: &BTreeMap<String, String>, query: &str, k1: f64, b: f64, k: usize) -> Vec<(String, f64)> {
    let tok: Vec<(&String, Vec<&str>)> = docs.iter().map(|(p, t)| (p, t.split_whitespace().collect())).collect();
    let n = tok.len() as f64;
    let avg = tok.iter().map(|(_, t)| t.len()).sum::<usize>() as f64 / n;
    let avg = if avg > 0.0 { avg } else { 1.0 };
    let mut ranked = Vec::new();
    for (path, terms) in &tok {
        let mut score = 0.0;
        for q in query.split_whitespace() {
            let tf = terms.iter().filter(|t| **t == q).count() as f64;
            if tf > 0.0 {
                let df = tok.iter().filter(|(_, t)| t.contains(&q)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * terms.len() as f64 / avg));
            }
        }
        if score > 0.0 {
            ranked.push(((*path).clone(), score));
        }
    }
    ranked.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    ranked.truncate(k);
    ranked
}

fn bm25_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb325);
    let vocab: Vec<String> = (0..100).map(|i| format!("w{}", ["a", "e", "i", "o", "u"][i % 5].repeat(i / 5 + 1))).collect();
    let mut compared = 0;
    let mut ties = 0;
    for corpus in 0..50 {
        let n_docs = rng.gen_range(1..=10);
        let vocab_size = rng.gen_range(5..=100);
        let mut docs = BTreeMap::new();
        for d in 0..n_docs {
            let text = if d > 0 && rng.gen_bool(0.2) {
                docs.values().next().cloned().unwrap()
            } else {
                (0..rng.gen_range(0..30)).map(|_| vocab[rng.gen_range(0..vocab_size)].clone()).collect::<Vec<_>>().join(" ")
            };
            docs.insert(format!("d{d:02}.py"), text);
        }
        let query = (0..rng.gen_range(1..6)).map(|_| vocab[rng.gen_range(0..vocab_size)].clone()).collect::<Vec<_>>().join(" ");
        let k = rng.gen_range(1..=10);
        let b = [0.0, 0.75, 1.0, rng.gen_range(0.0..1.0)][corpus % 4];
        let got = Bm25Index::build(&docs, 1.2, b).map_err(|e| e.to_string())?.query_top_k(&query, k);
        let want = brute_force_bm25(&docs, &query, 1.2, b, k);
        ensure!(got.len() == want.len(), "corpus {corpus}: {} vs {} results", got.len(), want.len());
        for (i, ((gp, gs), (wp, ws))) in got.iter().zip(&want).enumerate() {
            ensure!(gp == wp, "corpus {corpus}: rank {i} is {gp}, expected {wp}");
            ensure!((gs - ws).abs() < 1e-9, "corpus {corpus}: {gp} scored {gs}, expected {ws}");
            compared += 1;
        }
        ties += want.windows(2).filter(|w| w[0].1 == w[1].1).count();
    }
    ensure!(ties > 0, "no score ties were exercised");
    Ok(format!("50 corpora, {compared} ranked entries within 1e-9, {ties} ties ordered by path"))
}

// ---------------------------------------------------------------------------
// 5

fn gold_from(v: &Value) -> GoldLocalization {
    let strs = |k: &str| v[k].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect();
    let pairs = |k: &str| {
        v[k].as_array().unwrap().iter().map(|p| (p[0].as_str().unwrap().to_string(), p[1].clone())).collect::<Vec<_>>()
    };
    GoldLocalization {
        files: strs("files"),
        functions: pairs("functions").into_iter().map(|(f, q)| (f, q.as_str().unwrap().to_string())).collect(),
        lines: pairs("lines").into_iter().map(|(f, l)| (f, l.as_u64().unwrap() as usize)).collect(),
    }
}

fn load_json(name: &str) -> Result<Value, String> {
    serde_json::from_slice(&read(&fixtures().join(name))?).map_err(|e| e.to_string())
}

fn gold_label_fixtures() -> Check {
    let rules = ExclusionRules::default();
    let synthetic = load_json("gold_cases.json")?;
    let skeletons: BTreeMap<String, _> = synthetic["sources"]
        .as_object()
        .unwrap()
        .iter()
        .filter(|(p, _)| p.ends_with(".py"))
        .map(|(p, s)| (p.clone(), parse_file(p, s.as_str().unwrap()).unwrap()))
        .collect();
    let mut names = BTreeSet::new();
    for case in synthetic["cases"].as_array().unwrap() {
        let name = case["name"].as_str().unwrap();
        let diffs = parse_unified_diff(case["diff"].as_str().unwrap()).map_err(|e| format!("{name}: {e}"))?;
        let got = gold_labels(&diffs, &skeletons, &rules).map_err(|e| format!("{name}: {e}"))?;
        ensure!(got == gold_from(case), "{name}: got {got:?}");
        names.insert(name.to_string());
    }
    for needed in ["pure_insertion_inside_function", "module_level_deletion", "rename_only", "nested_function_edit", "tests_only"] {
        ensure!(names.contains(needed), "fixture {needed} missing");
    }

    let toy_labels = load_json("gold_toy.json")?;
    let tasks = toy_tasks()?;
    let snaps = DirSnapshots::new(toy());
    for (t, want) in tasks.iter().zip(toy_labels.as_array().unwrap()) {
        ensure!(want["task"] == t.task_id().as_str(), "task order differs at {}", t.task_id());
        let ctx = task_context(t, &snaps, &rules).map_err(|e| e.to_string())?;
        ensure!(ctx.gold == gold_from(want), "{}: got {:?}", t.task_id(), ctx.gold);
    }
    Ok(format!("{} synthetic diffs and {} fixture PRs match hand labels", names.len(), tasks.len()))
}

// ---------------------------------------------------------------------------
// 6

fn skeleton_spans() -> Check {
    let frozen = load_json("skeleton_spans.json")?;
    let mut mismatches = Vec::new();
    let mut decls = 0;
    for (rel, want) in frozen.as_object().unwrap() {
        let source = String::from_utf8(read(&fixtures().join(rel))?).map_err(|e| e.to_string())?;
        let got = match parse_file(rel, &source) {
            Err(e) => serde_json::json!({ "error": e.line }),
            Ok(s) => {
                decls += s.declarations.len();
                let list: Vec<Value> = s
                    .declarations
                    .iter()
                    .map(|d| {
                        serde_json::json!({
                            "end_line": d.end_line,
                            "kind": d.kind,
                            "qualified_name": d.qualified_name,
                            "signature": d.signature_text,
                            "start_line": d.start_line,
                        })
                    })
                    .collect();
                serde_json::json!({ "declarations": list })
            }
        };
        if &got != want {
            mismatches.push(rel.clone());
        }
    }
    ensure!(mismatches.is_empty(), "{} mismatching files: {:?}", mismatches.len(), mismatches);

    let live = Command::new("python3")
        .current_dir(fixtures())
        .args(["skeleton_oracle.py", "skeleton", "toy"])
        .output();
    let note = match live {
        Ok(o) if o.status.success() => {
            let fresh: Value = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
            ensure!(fresh == frozen, "reference output drifted from skeleton_spans.json");
            "live reference run agrees"
        }
        _ => "python3 unavailable, frozen reference only",
    };
    Ok(format!("{} files, {decls} declarations, 0 mismatches; {note}", frozen.as_object().unwrap().len()))
}

// ---------------------------------------------------------------------------
// 7

fn oracle_end_to_end() -> Check {
    let tasks = toy_tasks()?;
    let snaps = DirSnapshots::new(toy());
    let rules = ExclusionRules::default();
    let mut summary = Vec::new();
    for driver in [Driver::Agentless, Driver::RagSwe] {
        let ev = evaluate(&tasks, &snaps, &rules, driver, &PredictorChoice::Oracle, RagParams::default(), Parallelism::Auto)
            .map_err(|e| e.to_string())?;
        ensure!(ev.task_errors.is_empty(), "{driver:?}: task errors {:?}", ev.task_errors);
        let levels = [("file", ev.report.file), ("func", ev.report.func), ("line", ev.report.line)];
        for (name, level) in levels {
            match (driver, level) {
                (Driver::RagSwe, Some(_)) if name != "file" => return Err(format!("rag_swe scored the {name} level")),
                (_, Some(l)) => ensure!(
                    l.instance_pct == 100.0 && l.micro_pct == 100.0,
                    "{driver:?} {name}: {}% / {}%",
                    l.instance_pct,
                    l.micro_pct
                ),
                (Driver::Agentless, None) => return Err(format!("agentless left the {name} level unscored")),
                (Driver::RagSwe, None) => {}
            }
        }
        let clean = ev.results.iter().filter(|r| r.edit_status == EditOutcome::Applied { matches_post_merge: true }).count();
        ensure!(clean == ev.results.len(), "{driver:?}: {clean}/{} clean edits", ev.results.len());
        summary.push(format!("{driver:?} {} tasks", ev.results.len()));
    }
    Ok(format!("{}; 100% hits and clean edits, rag func/line unscored", summary.join(", ")))
}

// ---------------------------------------------------------------------------
// 8

fn filter_contracts() -> Check {
    let toy = toy();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path().join("d.jsonl");
    let r = dir.path().join("r.json");
    let o = resat(&["build", "--fixtures", toy.to_str().unwrap(), "--out", d.to_str().unwrap(), "--report", r.to_str().unwrap()])?;
    ensure!(o.status.success(), "build failed");
    let report: Value = serde_json::from_slice(&read(&r)?).map_err(|e| e.to_string())?;
    let dropped = &report["drops_per_reason"]["token_budget"];
    ensure!(dropped["LineLoc"] == 1 && dropped["CodeEdit"] == 1, "token budget drops: {dropped}");
    let data = String::from_utf8(read(&d)?).map_err(|e| e.to_string())?;
    let mut cfg32 = BTreeSet::new();
    for line in data.lines() {
        let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        ensure!(v["meta"]["token_count"].as_u64().unwrap() <= 32768, "an emitted sample exceeds the budget");
        if v["meta"]["repo"] == "acme/cfgparse" && v["meta"]["pr_number"] == 32 {
            cfg32.insert(v["kind"].as_str().unwrap().to_string());
        }
    }
    ensure!(cfg32 == BTreeSet::from(["FileLoc".to_string(), "FuncLoc".to_string()]), "cfgparse-32 kept {cfg32:?}");

    let sel = select_corpus(&toy, &SelectConfig::default(), &offline(), &NoNetwork).map_err(|e| e.to_string())?;
    let tiny = sel.rejected.iter().find(|r| r.name == "tinyrepo").ok_or("tinyrepo was selected")?;
    ensure!(tiny.star_count == 999 && tiny.excluded_reason == Some(ExcludedReason::Stars), "tinyrepo: {tiny:?}");
    let cfg = sel.selected.iter().find(|r| r.name == "cfgparse").ok_or("cfgparse was rejected")?;
    ensure!(cfg.star_count == 1000, "cfgparse has {} stars", cfg.star_count);

    let at = |stars| {
        let mut r = RepoRecord::new("o", &format!("r{stars}"));
        r.star_count = stars;
        r.pr_count = 1000;
        r.license_allows_use = true;
        r
    };
    let s = select_repos(&[at(999), at(1000)], 1000, 1000, &BTreeSet::new());
    ensure!(s.selected.len() == 1 && s.selected[0].star_count == 1000, "boundary selection {s:?}");
    Ok("cfgparse-32 LineLoc/CodeEdit dropped over 32768 tokens; 999 stars excluded, 1000 selected".into())
}

// ---------------------------------------------------------------------------
// 9

fn determinism() -> Check {
    let toy = toy();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "4", "4", "1"].iter().enumerate() {
        let out = dir.path().join(format!("d{i}.jsonl"));
        let o = resat(&[
            "build", "--fixtures", toy.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--seed", "7", "--workers", workers,
        ])?;
        ensure!(o.status.success(), "build with {workers} workers failed");
        outputs.push(read(&out)?);
    }
    ensure!(outputs.windows(2).all(|w| w[0] == w[1]), "outputs differ across runs or worker counts");
    Ok(format!("4 runs with seed 7 at 1 and 4 workers, {} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let cases = edit_cases();
    let checks: Vec<Criterion> = vec![
        ("fixture dataset matches golden files", Box::new(golden_dataset)),
        ("search/replace round-trip", Box::new(|| edit_round_trip(&cases))),
        ("unified diff round-trip", Box::new(|| diff_round_trip(&cases))),
        ("BM25 brute-force equivalence", Box::new(bm25_oracle)),
        ("gold-label fixtures", Box::new(gold_label_fixtures)),
        ("skeleton span reference", Box::new(skeleton_spans)),
        ("oracle predictor end to end", Box::new(oracle_end_to_end)),
        ("filter contracts", Box::new(filter_contracts)),
        ("determinism across runs and workers", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS  {}  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
