use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn modesel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modesel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = modesel(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_prints_summary_and_uses_pool() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let stdout = ok(&["generate", "--tasks", "100", "--modes", "5", "--seed", "7", "--out", s(&inst)]);
    assert!(stdout.contains("100 tasks, 5 modes"), "{stdout}");
    assert!(stdout.contains(s(&inst)));
    let v = json(&inst);
    assert_eq!(v["num_tasks"], 100);
    assert_eq!(v["num_modes"], 5);
    let pool = [10.0, 20.0, 40.0, 80.0, 100.0];
    for row in v["bandwidth"].as_array().unwrap() {
        for b in row.as_array().unwrap() {
            assert!(pool.contains(&b.as_f64().unwrap()));
        }
    }
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.json"), p(&dir, "b.json"));
    for out in [&a, &b] {
        ok(&["generate", "--tasks", "40", "--modes", "3", "--seed", "11", "--out", s(out)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn generate_zero_modes_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = modesel(&["generate", "--modes", "0", "--out", s(&p(&dir, "x.json"))]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(line["error"], "validation");
    assert!(line["message"].as_str().unwrap().contains("num_modes"));
    assert!(!p(&dir, "x.json").exists());
}

#[test]
fn solve_unknown_algorithm_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    ok(&["generate", "--tasks", "5", "--modes", "2", "--out", s(&inst)]);
    let out = modesel(&["solve", "-i", s(&inst), "--algo", "greedy", "-o", s(&p(&dir, "o.json"))]);
    assert!(!out.status.success());
    let line: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(line["error"], "usage");
}

#[test]
fn solve_rejects_invalid_instance() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "bad.json");
    fs::write(
        &inst,
        r#"{"format_version":"1.0","num_tasks":1,"num_modes":1,"data_size":[-5.0],
            "deadline":[1.0],"bandwidth":[[10.0]],"buffer_delay":[1.0],"support":[[1]]}"#,
    )
    .unwrap();
    let out = modesel(&["solve", "-i", s(&inst), "--algo", "aarlm", "-o", s(&p(&dir, "o.json"))]);
    assert!(!out.status.success());
    let line: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(line["error"], "validation");
}

#[test]
fn readers_reject_unknown_major_version() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    ok(&["generate", "--tasks", "5", "--modes", "2", "--out", s(&inst)]);
    let text = fs::read_to_string(&inst).unwrap().replace("\"1.0\"", "\"2.0\"");
    fs::write(&inst, text).unwrap();
    let out = modesel(&["validate", "-i", s(&inst)]);
    assert!(!out.status.success());
    let line: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(line["error"], "parse");
    assert!(line["message"].as_str().unwrap().contains("2.0"));
}

#[test]
fn single_task_goes_to_fastest_supported_mode() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "one.json");
    fs::write(
        &inst,
        r#"{"format_version":"1.0","num_tasks":1,"num_modes":3,"data_size":[20.0],
            "deadline":[5.0],"bandwidth":[[10.0,100.0,40.0]],"buffer_delay":[1.0,1.0,1.0],
            "support":[[1,0,1]]}"#,
    )
    .unwrap();
    for algo in ["aarlm", "anneal", "random", "exact"] {
        let sol = p(&dir, &format!("{algo}.json"));
        ok(&["solve", "-i", s(&inst), "--algo", algo, "-o", s(&sol)]);
        assert_eq!(json(&sol)["assignment"], serde_json::json!([2]), "{algo}");
    }
}

#[test]
fn exact_on_twelve_tasks_reports_proven_optimal() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let sol = p(&dir, "s.json");
    ok(&["generate", "--tasks", "12", "--modes", "4", "--seed", "3", "--out", s(&inst)]);
    ok(&["solve", "-i", s(&inst), "--algo", "exact", "-o", s(&sol)]);
    let v = json(&sol);
    assert_eq!(v["proven_optimal"], true);
    assert_eq!(v["format_version"], "1.0");
    assert!(v["runtime_s"].is_null());
}

#[test]
fn deadline_misses_do_not_fail_solve() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let sol = p(&dir, "s.json");
    ok(&["generate", "--tasks", "100", "--modes", "2", "--seed", "1", "--out", s(&inst)]);
    ok(&["solve", "-i", s(&inst), "--algo", "random", "-o", s(&sol)]);
    assert!(json(&sol)["completion_rate"].as_f64().unwrap() < 1.0);
}

#[test]
fn solve_output_is_byte_identical_and_runtime_is_opt_in() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    ok(&["generate", "--tasks", "60", "--modes", "4", "--seed", "5", "--out", s(&inst)]);
    for algo in ["aarlm", "anneal", "random"] {
        let (a, b) = (p(&dir, "a.json"), p(&dir, "b.json"));
        for out in [&a, &b] {
            ok(&["solve", "-i", s(&inst), "--algo", algo, "--seed", "9", "-o", s(out)]);
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{algo}");
    }
    let timed = p(&dir, "t.json");
    ok(&["solve", "-i", s(&inst), "--algo", "aarlm", "--record-runtime", "-o", s(&timed)]);
    assert!(json(&timed)["runtime_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn solve_writes_trace_lines() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let trace = p(&dir, "t.jsonl");
    ok(&["generate", "--tasks", "30", "--modes", "3", "--seed", "2", "--out", s(&inst)]);
    ok(&[
        "solve", "-i", s(&inst), "--algo", "aarlm", "--episodes", "5", "--trace", s(&trace), "-o",
        s(&p(&dir, "s.json")),
    ]);
    let text = fs::read_to_string(&trace).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["reward_ms"].is_number());
        assert!(v["accepted"].is_boolean());
    }
}

#[test]
fn round_trip_over_100_seeds_all_algorithms() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let sol = p(&dir, "s.json");
    for seed in 0..100u64 {
        let seed = seed.to_string();
        ok(&["generate", "--seed", &seed, "--out", s(&inst)]);
        for algo in ["aarlm", "anneal", "random", "exact"] {
            ok(&[
                "solve", "-i", s(&inst), "--algo", algo, "--seed", &seed, "--episodes", "10",
                "--exact-budget", "2000", "-o", s(&sol),
            ]);
            let stdout = ok(&["validate", "-i", s(&inst), "-s", s(&sol)]);
            assert!(stdout.contains("0 violations"), "seed {seed} {algo}: {stdout}");
        }
    }
}

#[test]
fn validate_reports_violations() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let sol = p(&dir, "s.json");
    ok(&["generate", "--tasks", "8", "--modes", "2", "--seed", "4", "--out", s(&inst)]);
    ok(&["solve", "-i", s(&inst), "--algo", "aarlm", "-o", s(&sol)]);
    let mut v = json(&sol);
    v["assignment"][0] = serde_json::json!(7);
    fs::write(&sol, v.to_string()).unwrap();
    let out = modesel(&["validate", "-i", s(&inst), "-s", s(&sol)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation"));
    let line: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(line["error"], "validation");
    assert_eq!(line["violations"][0]["kind"], "mode_out_of_range");
}

#[test]
fn sweep_is_byte_identical_across_job_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "sweep.json");
    fs::write(
        &cfg,
        r#"{"format_version":"1.0","base":{"num_tasks":30,"num_modes":4,"seed":99},
            "axis":"num_modes","points":[2,3,4],"algorithms":["aarlm","anneal","random","exact"],
            "num_seeds":4,"algo_config":{"exact_budget":5000}}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let (sum, runs) = (p(&dir, &format!("s{jobs}.csv")), p(&dir, &format!("r{jobs}.csv")));
        ok(&["sweep", "-c", s(&cfg), "-o", s(&sum), "--runs-out", s(&runs), "--jobs", jobs]);
        outputs.push((fs::read(&sum).unwrap(), fs::read(&runs).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let summary = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 4);
}

#[test]
fn sweep_with_no_algorithms_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "sweep.json");
    let out = p(&dir, "out.csv");
    fs::write(
        &cfg,
        r#"{"format_version":"1.0","base":{"num_tasks":20},"axis":"num_modes",
            "points":[2,3],"algorithms":[]}"#,
    )
    .unwrap();
    ok(&["sweep", "-c", s(&cfg), "-o", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("axis,axis_value,algorithm"));
}

#[test]
fn bundled_configs_have_expected_grids() {
    for (name, axis, points) in [
        ("fig3.sweep.json", "num_modes", 4),
        ("fig4.sweep.json", "num_tasks", 6),
        ("fig5.sweep.json", "num_tasks", 6),
        ("fig6.sweep.json", "num_modes", 4),
    ] {
        let v = json(&repo_config(name));
        assert_eq!(v["axis"], axis, "{name}");
        assert_eq!(v["points"].as_array().unwrap().len(), points, "{name}");
    }
}

#[test]
fn bundled_fig3_sweep_produces_four_point_csv() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "fig3.csv");
    let stdout = ok(&["sweep", "-c", s(&repo_config("fig3.sweep.json")), "-o", s(&out), "--seeds", "3"]);
    assert!(stdout.contains("makespan_trend"));
    let text = fs::read_to_string(&out).unwrap();
    let values: std::collections::BTreeSet<&str> =
        text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values.into_iter().collect::<Vec<_>>(), ["2", "3", "4", "5"]);
}

#[test]
fn compare_runs_each_algorithm() {
    let dir = TempDir::new().unwrap();
    let inst = p(&dir, "i.json");
    let out = p(&dir, "cmp.json");
    ok(&["generate", "--tasks", "10", "--modes", "3", "--seed", "8", "--out", s(&inst)]);
    let stdout = ok(&["compare", "-i", s(&inst), "-o", s(&out)]);
    for algo in ["aarlm", "anneal", "random", "exact"] {
        assert!(stdout.contains(algo), "{stdout}");
    }
    let v = json(&out);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    let exact = results[3]["makespan_ms"].as_f64().unwrap();
    for r in results {
        assert!(r["makespan_ms"].as_f64().unwrap() >= exact * (1.0 - 1e-9));
    }
}
