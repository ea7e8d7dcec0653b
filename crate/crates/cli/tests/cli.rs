use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dcosp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcosp")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scenario_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

/// Generates `n` tiny scenarios under `dir/scen` and returns their relative paths.
fn tiny_suite(dir: &Path, n: usize) -> Vec<String> {
    ok(&dcosp(&["generate", "--scenarios", &n.to_string(), "--out", "scen"], dir));
    scenario_files(&dir.join("scen"))
        .into_iter()
        .map(|p| p.strip_prefix(dir).unwrap().to_string_lossy().into_owned())
        .collect()
}

fn bench(dir: &Path, out: &str, extra: &[&str], files: &[String]) -> Output {
    let mut args = vec!["bench", "--out", out];
    args.extend_from_slice(extra);
    args.extend(files.iter().map(String::as_str));
    dcosp(&args, dir)
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&dcosp(&["generate", "--scenarios", "2", "--out", "a"], dir.path()));
    ok(&dcosp(&["generate", "--scenarios", "2", "--out", "b"], dir.path()));
    for name in ["tiny-000.json", "tiny-001.json", "tiny.toml"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn shipped_constellations_have_their_agent_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, agents) in [("planet", "200"), ("walker", "108")] {
        let stdout = ok(&dcosp(
            &["generate", "--preset", preset, "--scenarios", "1", "--horizon-length-s", "3600", "--out", preset],
            dir.path(),
        ));
        let row = stdout.lines().nth(1).unwrap();
        assert_eq!(row.split_whitespace().nth(1), Some(agents), "{row}");
    }
}

#[test]
fn emitted_config_regenerates_the_same_suite() {
    let dir = tempfile::tempdir().unwrap();
    ok(&dcosp(&["generate", "--scenarios", "1", "--p-u", "0.4", "--gnd-seed", "9", "--out", "a"], dir.path()));
    ok(&dcosp(&["generate", "--config", "a/tiny.toml", "--out", "b"], dir.path()));
    let a = std::fs::read_to_string(dir.path().join("a/tiny.toml")).unwrap();
    assert_eq!(a, std::fs::read_to_string(dir.path().join("b/tiny.toml")).unwrap());
    assert!(a.contains("p_u = 0.4") && a.contains("gnd = 9"));
    assert_eq!(std::fs::read(dir.path().join("a/tiny-000.json")).unwrap(), std::fs::read(dir.path().join("b/tiny-000.json")).unwrap());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "scenarios = 2\n[solver]\nmax_iters = 7\n").unwrap();
    ok(&dcosp(&["generate", "--scenarios", "1", "--max-iters", "3", "--config", "c.toml", "--out", "o"], dir.path()));
    let cfg = std::fs::read_to_string(dir.path().join("o/tiny.toml")).unwrap();
    assert!(cfg.contains("max_iters = 7"), "{cfg}");
    assert_eq!(scenario_files(&dir.path().join("o")).len(), 2);
}

#[test]
fn invalid_fields_exit_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["generate", "--p-u", "1.5", "--out", "o"][..],
        &["generate", "--scenarios", "0", "--out", "o"],
        &["generate", "--preset", "moon", "--out", "o"],
        &["generate", "--target-count", "5000", "--preset", "planet", "--out", "o"],
    ] {
        let out = dcosp(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("config"), "{err}");
    }
    let out = dcosp(&["generate", "--p-u", "1.5", "--out", "o"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`solver`"));
}

#[test]
fn bench_emits_sorted_tables_and_traceable_records() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_suite(dir.path(), 3);
    let stdout = ok(&bench(dir.path(), "res", &["--workers", "2"], &files));
    let res = dir.path().join("res");

    let table: Vec<&str> = stdout.lines().skip(2).collect();
    let names: Vec<&str> = table.iter().map(|l| l.split('|').nth(1).unwrap().trim()).collect();
    assert_eq!(names, ["d-nss", "0-nss", "d-dsa", "0-dsa", "greedy", "random", "oracle (bnb)"]);
    for line in &table[4..6] {
        assert_eq!(line.split('|').nth(6).unwrap().trim(), "0.0", "{line}");
    }
    assert!(table.iter().all(|l| !l.contains("lower bound")));
    assert_eq!(std::fs::read_to_string(res.join("table.md")).unwrap(), stdout);

    let mut reader = csv::Reader::from_path(res.join("results.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 18);
    let solvers: Vec<&str> = rows.iter().map(|r| &r[col("solver")]).collect();
    let mut sorted = solvers.clone();
    sorted.dedup();
    assert_eq!(sorted, ["d-nss", "0-nss", "d-dsa", "0-dsa", "greedy", "random"]);
    for r in &rows {
        // every number traces back to a persisted record
        let run_file = res.join(&r[col("run_file")]);
        let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&run_file).unwrap()).unwrap();
        let m = &rec["record"]["metrics"];
        assert_eq!(m["satisfied"].to_string(), r[col("satisfied")]);
        assert_eq!(m["ledger"]["messages"].to_string(), r[col("messages")]);
        if matches!(&r[col("solver")], "greedy" | "random") {
            assert_eq!(&r[col("message_kb")], "0.0");
        }
        let gap: f64 = r[col("gap_pp")].parse().unwrap();
        assert!(gap >= -1e-9, "a solver beat the proven optimum");
        assert_eq!(&r[col("reference")], "optimal");
        let trace = res.join("traces").join(format!("{}.csv", run_file.file_stem().unwrap().to_string_lossy()));
        assert!(std::fs::read_to_string(trace).unwrap().starts_with("event-index,iteration,solver,"));
    }
    assert_eq!(std::fs::read_dir(res.join("oracle")).unwrap().count(), 3);
    assert!(std::fs::read_to_string(res.join("figure3.csv")).unwrap().starts_with("solver,event-index,iteration,"));

    let runs: Vec<String> = std::fs::read_dir(res.join("runs"))
        .unwrap()
        .map(|e| e.unwrap().path().strip_prefix(dir.path()).unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(runs.len(), 18);
    let mut replay = vec!["replay"];
    replay.extend(runs.iter().map(String::as_str));
    ok(&dcosp(&replay, dir.path()));
    let mut verify = vec!["verify"];
    verify.extend(runs.iter().map(String::as_str));
    ok(&dcosp(&verify, dir.path()));
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_suite(dir.path(), 4);
    ok(&bench(dir.path(), "one", &["--workers", "1"], &files));
    ok(&bench(dir.path(), "four", &["--workers", "4"], &files));
    let strip_timing = |dir: &str| -> Vec<String> {
        let text = std::fs::read_to_string(Path::new(dir).join("results.csv")).unwrap();
        text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect()
    };
    let base = dir.path().to_string_lossy().into_owned();
    assert_eq!(strip_timing(&format!("{base}/one")), strip_timing(&format!("{base}/four")));
    for f in ["figure3.csv", "traces/tiny-002.d-nss.csv", "traces/tiny-003.0-dsa.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("one").join(f)).unwrap(),
            std::fs::read(dir.path().join("four").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn tampered_records_fail_with_the_invariant_code() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_suite(dir.path(), 1);
    ok(&bench(dir.path(), "res", &["--solvers", "d-nss", "--oracle", "none"], &files));
    let path = dir.path().join("res/runs/tiny-000.d-nss.json");
    let mut rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let satisfied = rec["record"]["metrics"]["satisfied"].as_u64().unwrap();
    rec["record"]["metrics"]["satisfied"] = (satisfied + 1).into();
    std::fs::write(dir.path().join("forged.json"), rec.to_string()).unwrap();
    for cmd in ["verify", "replay"] {
        let out = dcosp(&[cmd, "forged.json"], dir.path());
        assert_eq!(out.status.code(), Some(3), "{cmd}: {}", String::from_utf8_lossy(&out.stdout));
    }
    // a snapshot that drops a task which had already started
    let trace = rec["record"]["schedule_trace"].as_array().unwrap().clone();
    let mut rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let last = trace.len() - 1;
    rec["record"]["schedule_trace"][last] = serde_json::json!([]);
    std::fs::write(dir.path().join("forged.json"), rec.to_string()).unwrap();
    let out = dcosp(&["verify", "forged.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exhausted_oracle_budget_is_labeled_and_signalled() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_suite(dir.path(), 2);
    let out = bench(dir.path(), "res", &["--node-budget", "1"], &files);
    assert_eq!(out.status.code(), Some(4));
    let table = std::fs::read_to_string(dir.path().join("res/table.md")).unwrap();
    assert!(table.contains("lower bound (2/2 unproven)"), "{table}");
    let results = std::fs::read_to_string(dir.path().join("res/results.csv")).unwrap();
    assert!(results.contains(",lower-bound,"));
    ok(&bench(dir.path(), "res2", &["--node-budget", "1", "--allow-unproven"], &files));
}

#[test]
fn no_oracle_leaves_gaps_blank() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_suite(dir.path(), 1);
    let stdout = ok(&bench(dir.path(), "res", &["--oracle", "none", "--solvers", "greedy,random"], &files));
    assert!(stdout.contains("| greedy | n/a | no oracle |"));
    assert!(!stdout.contains("oracle (bnb)"));
    assert_eq!(std::fs::read_dir(dir.path().join("res/oracle")).unwrap().count(), 0);
}
