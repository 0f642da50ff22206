//! Drives the `otkit` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use otkit_core::io::{plan_from_json, plan_to_json, problem_from_json, problem_to_json};
use otkit_core::{CostMatrix, DiscreteMeasure, Problem};
use serde_json::Value;
use tempfile::TempDir;

fn otkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otkit")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = otkit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn exit_code(args: &[&str]) -> i32 {
    otkit(args).status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, seed: u64, n: usize, m: usize, family: &str) -> PathBuf {
    let out = dir.join(name);
    let (seed, n, m) = (seed.to_string(), n.to_string(), m.to_string());
    ok(&["generate", "--seed", &seed, "--n", &n, "--m", &m, "--family", family, "--output-dir", path_str(&out)]);
    out.join("problem.json")
}

fn write_problem(dir: &Path, problem: &Problem) -> PathBuf {
    let path = dir.join("custom.json");
    std::fs::write(&path, problem_to_json(problem)).unwrap();
    path
}

fn load_problem(path: &Path) -> Problem {
    problem_from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_curve(path: &Path) -> Vec<(f64, usize, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("target_eps,iterations,wall_ns,achieved_eps"));
    lines
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            (cells[0].parse().unwrap(), cells[1].parse().unwrap(), cells[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn generate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let first = generate(tmp.path(), "x", 7, 5, 6, "uniform-random");
    let second = generate(tmp.path(), "y", 7, 5, 6, "uniform-random");
    assert_eq!(std::fs::read(first).unwrap(), std::fs::read(second).unwrap());
}

#[test]
fn generate_grid_1d_uses_index_distance() {
    let tmp = TempDir::new().unwrap();
    let problem = load_problem(&generate(tmp.path(), "g", 0, 3, 3, "grid-1d-l1"));
    assert_eq!(problem.cost.entries(), &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
}

#[test]
fn generate_normalizes_random_marginals() {
    let tmp = TempDir::new().unwrap();
    let problem = load_problem(&generate(tmp.path(), "u", 3, 4, 5, "uniform-random"));
    assert!((problem.a.total_mass() - 1.0).abs() <= 1e-12);
    assert!((problem.b.total_mass() - 1.0).abs() <= 1e-12);
    assert_eq!((problem.n(), problem.m()), (4, 5));
}

#[test]
fn run_on_a_single_point_is_exact() {
    let tmp = TempDir::new().unwrap();
    let one = DiscreteMeasure::new(vec![1.0]).unwrap();
    let problem = Problem::new(one.clone(), one, CostMatrix::new(1, 1, vec![0.7]).unwrap()).unwrap();
    let input = write_problem(tmp.path(), &problem);
    let out = tmp.path().join("run");
    ok(&["run", "--input", path_str(&input), "--algo", "sinkhorn", "--with-oracle", "--output-dir", path_str(&out)]);
    let summary = read_json(&out.join("summary.json"));
    assert!(summary["epsilon_suboptimality"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn run_sinkhorn_with_oracle_meets_its_budget() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 42, 4, 4, "uniform-random");
    let scale = load_problem(&input).cost.max_abs();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, format!(r#"{{"algo": "sinkhorn", "eta": {}, "tol": 1e-9}}"#, 0.01 * scale)).unwrap();
    let out = tmp.path().join("run");
    ok(&["run", "--config", path_str(&config), "--input", path_str(&input), "--with-oracle", "--output-dir", path_str(&out)]);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["algo"], "sinkhorn");
    let eps = summary["epsilon_suboptimality"].as_f64().unwrap();
    assert!((-1e-9..=0.01 * scale).contains(&eps), "{eps}");
    for key in ["eta", "iterations", "wall_ns", "primal_cost", "oracle_cost", "row_violation_l1", "col_violation_l1"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,primal_cost,dual_value,row_violation_l1,col_violation_l1,elapsed_ns\n"));
    assert!(trace.lines().count() > 1);
}

#[test]
fn run_exact_has_zero_suboptimality_and_writes_duals() {
    let tmp = TempDir::new().unwrap();
    for (k, family) in ["uniform-random", "grid-2d-l2sq", "two-gaussians-discretized"].iter().enumerate() {
        let input = generate(tmp.path(), &format!("p{k}"), k as u64, 6, 5, family);
        let out = tmp.path().join(format!("run{k}"));
        ok(&["run", "--input", path_str(&input), "--algo", "exact", "--with-oracle", "--output-dir", path_str(&out)]);
        let summary = read_json(&out.join("summary.json"));
        assert!(summary["epsilon_suboptimality"].as_f64().unwrap().abs() <= 1e-9, "{family}");
        assert!(out.join("duals.json").exists());
    }
}

#[test]
fn emitted_plans_round_trip_bit_exactly() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 5, 5, 5, "uniform-random");
    for algo in ["exact", "sinkhorn", "greenkhorn", "apdgcd"] {
        let out = tmp.path().join(algo);
        ok(&["run", "--input", path_str(&input), "--algo", algo, "--output-dir", path_str(&out)]);
        let text = std::fs::read_to_string(out.join("plan.json")).unwrap();
        assert_eq!(plan_to_json(&plan_from_json(&text).unwrap()), text, "{algo}");
    }
}

#[test]
fn oracle_fields_need_the_flag() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 1, 3, 3, "uniform-random");
    let out = tmp.path().join("run");
    ok(&["run", "--input", path_str(&input), "--algo", "greenkhorn", "--output-dir", path_str(&out)]);
    let summary = read_json(&out.join("summary.json"));
    assert!(summary.get("oracle_cost").is_none());
    assert!(summary.get("epsilon_suboptimality").is_none());
}

#[test]
fn curve_with_a_huge_target_needs_at_most_one_iteration() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 9, 6, 6, "uniform-random");
    let out = tmp.path().join("curve");
    ok(&["curve", "--input", path_str(&input), "--algo", "sinkhorn,exact", "--eps", "1.5", "--output-dir", path_str(&out)]);
    for algo in ["sinkhorn", "exact"] {
        let rows = read_curve(&out.join(format!("curve_{algo}.csv")));
        assert_eq!(rows.len(), 1);
        assert!(rows[0].2 <= rows[0].0);
    }
    assert!(read_curve(&out.join("curve_sinkhorn.csv"))[0].1 <= 1);
}

#[test]
fn curve_rows_reach_every_target() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 8, 8, 8, "uniform-random");
    let out = tmp.path().join("curve");
    let grid = "0.2,0.1,0.05,0.02,0.01";
    ok(&["curve", "--input", path_str(&input), "--algo", "sinkhorn,greenkhorn", "--eps", grid, "--output-dir", path_str(&out)]);
    for algo in ["sinkhorn", "greenkhorn"] {
        let rows = read_curve(&out.join(format!("curve_{algo}.csv")));
        assert_eq!(rows.len(), 5, "{algo}");
        let mut last_target = f64::INFINITY;
        for (target, iterations, achieved) in rows {
            assert!(target < last_target, "grid order is preserved");
            last_target = target;
            assert!((-1e-9..=target).contains(&achieved), "{algo}: {achieved} > {target}");
            eprintln!("{algo}: target {target:.3e} took {iterations} iterations");
        }
    }
}

#[test]
fn curve_accepts_an_eta_grid() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 2, 4, 4, "uniform-random");
    let out = tmp.path().join("curve");
    ok(&["curve", "--input", path_str(&input), "--algo", "sinkhorn", "--eta", "0.1,0.01", "--output-dir", path_str(&out)]);
    let rows = read_curve(&out.join("curve_sinkhorn.csv"));
    let ln4 = 4f64.ln();
    assert!((rows[0].0 - 0.4 * ln4).abs() <= 1e-12 && (rows[1].0 - 0.04 * ln4).abs() <= 1e-12);
}

#[test]
fn compare_exact_alone_is_a_single_row() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 4, 2, 2, "uniform-random");
    let out = tmp.path().join("cmp");
    ok(&["compare", "--input", path_str(&input), "--algo", "exact", "--output-dir", path_str(&out)]);
    let report = read_json(&out.join("report.json"));
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["achieved_eps"].as_f64(), Some(0.0));
}

#[test]
fn compare_ranks_sinkhorn_and_greenkhorn() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 6, 6, 6, "uniform-random");
    let out = tmp.path().join("cmp");
    ok(&["compare", "--input", path_str(&input), "--algo", "sinkhorn,greenkhorn", "--eps", "0.05", "--output-dir", path_str(&out)]);
    let report = read_json(&out.join("report.json"));
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    let walls: Vec<u64> = entries.iter().map(|e| e["wall_ns"].as_u64().unwrap()).collect();
    assert!(walls[0] <= walls[1]);
    for e in entries {
        assert_eq!(e["achieved"], true);
        assert!(e["achieved_eps"].as_f64().unwrap() <= report["target_eps"].as_f64().unwrap());
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 0, 3, 3, "uniform-random");
    let input = path_str(&input);
    assert_eq!(exit_code(&["compare", "--input", input, "--algo", "sinkhorn,greenkhorn,sinkhorn"]), 1);
    assert_eq!(exit_code(&["run", "--input", input]), 1);
    assert_eq!(exit_code(&["run", "--input", input, "--algo", "simplex"]), 1);
    assert_eq!(exit_code(&["curve", "--input", input, "--algo", "sinkhorn", "--eps", "-1"]), 1);
    assert_eq!(exit_code(&["generate", "--n", "0"]), 1);
    assert_eq!(exit_code(&["frobnicate"]), 1);
    assert_eq!(exit_code(&["--help"]), 0);
}

#[test]
fn parse_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 0, 3, 3, "uniform-random");
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "m": 2, "a": [0.5, 0.5], "b": [1.0], "C": [0, 1, 1, 0]}"#).unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, r#"{"algo": "sinkhorn", "temperature": 3}"#).unwrap();
    let missing = tmp.path().join("missing.json");
    assert_eq!(exit_code(&["run", "--input", path_str(&bad), "--algo", "exact"]), 2);
    assert_eq!(exit_code(&["run", "--input", path_str(&missing), "--algo", "exact"]), 2);
    assert_eq!(exit_code(&["run", "--input", path_str(&input), "--config", path_str(&config)]), 2);
    assert_eq!(exit_code(&["barycenter", "--input", path_str(&input)]), 2);
}

#[test]
fn solver_errors_exit_with_three() {
    let tmp = TempDir::new().unwrap();
    let input = generate(tmp.path(), "p", 0, 3, 3, "uniform-random");
    let input = path_str(&input);
    assert_eq!(exit_code(&["run", "--input", input, "--algo", "auction"]), 3);
    assert_eq!(exit_code(&["run", "--input", input, "--algo", "sinkhorn", "--eta=-0.5"]), 3);
    let wide = generate(tmp.path(), "w", 0, 2, 3, "uniform-random");
    assert_eq!(exit_code(&["compare", "--input", path_str(&wide), "--algo", "auction"]), 3);
}

#[test]
fn otw_writes_a_symmetric_distance_matrix() {
    let tmp = TempDir::new().unwrap();
    let series = tmp.path().join("series.csv");
    std::fs::write(&series, "a,0,1,2,3\nb,1,2,3,4\nc,0,0,5\n").unwrap();
    let out = tmp.path().join("otw");
    ok(&["otw", "--input", path_str(&series), "--output-dir", path_str(&out)]);
    let text = std::fs::read_to_string(out.join("distances.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], vec!["", "a", "b", "c"]);
    let d = |i: usize, j: usize| rows[i + 1][j + 1].parse::<f64>().unwrap();
    assert!((d(0, 1) - 1.0).abs() <= 1e-12);
    for i in 0..3 {
        assert_eq!(d(i, i), 0.0);
        for j in 0..3 {
            assert_eq!(d(i, j), d(j, i));
        }
    }
}

#[test]
fn barycenter_of_two_diracs_is_the_midpoint() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("bary.json");
    let cost = "[0, 1, 4, 1, 0, 1, 4, 1, 0]";
    std::fs::write(
        &input,
        format!(r#"{{"K": 2, "m": 3, "weights": [0.5, 0.5], "inputs": [{{"a": [1, 0, 0], "C": {cost}}}, {{"a": [0, 0, 1], "C": {cost}}}]}}"#),
    )
    .unwrap();
    let exact = tmp.path().join("exact");
    ok(&["barycenter", "--input", path_str(&input), "--output-dir", path_str(&exact)]);
    let report = read_json(&exact.join("barycenter.json"));
    assert_eq!(report["method"], "exact");
    assert!((report["objective"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    assert!((report["weights"][1].as_f64().unwrap() - 1.0).abs() <= 1e-9);

    let entropic = tmp.path().join("entropic");
    ok(&["barycenter", "--input", path_str(&input), "--eta", "0.04", "--output-dir", path_str(&entropic)]);
    let report = read_json(&entropic.join("barycenter.json"));
    assert_eq!(report["method"], "entropic");
    assert!((report["objective"].as_f64().unwrap() - 1.0).abs() <= 0.05 * 4.0);
}
