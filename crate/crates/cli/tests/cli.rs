use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HAND_LP: &str = r#"{
  "name": "hand_lp",
  "cones": {"l": 2, "q": []},
  "A": {"rows": 1, "cols": 2, "triplets": [[0, 0, 1.0], [0, 1, 1.0]]},
  "b": [1.0],
  "c": [1.0, 0.0]
}"#;

const SOC: &str = r#"{
  "name": "soc_small",
  "cones": {"l": 1, "q": [3]},
  "A": {"rows": 2, "cols": 4, "triplets": [[0, 0, 1.0], [0, 1, 1.0], [1, 2, 1.0], [1, 3, 0.5]]},
  "b": [2.0, 0.5],
  "c": [2.0, 1.5, 0.0, 1.0]
}"#;

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(TempDir::new().unwrap())
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn socp(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socp")).args(args.iter().map(|a| a.as_ref())).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_doc(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("error document on stderr")
}

#[test]
fn solve_hand_lp_reaches_zero_objective() {
    let d = Dir::new();
    let problem = d.file("lp.json", HAND_LP);
    let output = d.path("sol.json");
    let out = socp(&[&"solve", &"--problem", &problem, &"--output", &output, &"--epsilon", &"1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let sol = json(&output);
    assert_eq!(sol["status"], "optimal");
    assert!(sol["primal_objective"].as_f64().unwrap().abs() < 1e-5);
    assert!(sol["dual_objective"].as_f64().unwrap().abs() < 1e-5);
    assert_eq!(sol["iterations"], sol["predicted_iterations"]);
    assert_eq!(sol["params"]["scaling"], "identity");
}

#[test]
fn trace_has_header_and_contracting_mu() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let (output, trace) = (d.path("sol.json"), d.path("trace.csv"));
    let out = socp(&[&"solve", &"--problem", &problem, &"--scaling", &"nt", &"--output", &output, &"--trace", &trace]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("iter,mu,d2,dinf"));
    let mus: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let iterations = json(&output)["iterations"].as_u64().unwrap() as usize;
    assert_eq!(mus.len(), iterations + 1);
    // k = 2, so nu = 1 - 0.03 / sqrt(6)
    let nu = 1.0 - 0.03 / 6f64.sqrt();
    for w in mus.windows(2) {
        assert!((w[1] / w[0] - nu).abs() < 1e-9);
    }
}

#[test]
fn infeasible_problem_is_classified_with_exit_zero() {
    let d = Dir::new();
    let problem = d.file("lp.json", &HAND_LP.replace("\"b\": [1.0]", "\"b\": [-1.0]"));
    let output = d.path("sol.json");
    let out = socp(&[&"solve", &"--problem", &problem, &"--output", &output]);
    assert_eq!(out.status.code(), Some(0));
    let sol = json(&output);
    assert_eq!(sol["status"], "primal_infeasible");
    assert!(sol.get("primal_objective").is_none());
}

#[test]
fn check_on_cold_start_reports_zero_distance() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let point = d.file(
        "cold.json",
        r#"{"x": [1, 1, 0, 0], "y": [0, 0], "s": [1, 1, 0, 0], "kappa": 1, "tau": 1}"#,
    );
    let out = socp(&[&"check", &"--problem", &problem, &"--point", &point, &"--gamma", &"0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["d2"].as_f64(), Some(0.0));
    assert_eq!(v["dinf"].as_f64(), Some(0.0));
    assert_eq!(v["mu"].as_f64(), Some(1.0));
    assert_eq!(v["in_n2"], true);
    assert_eq!(v["in_ninf"], true);
}

#[test]
fn check_flags_points_outside_the_cone() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let point = d.file(
        "bad.json",
        r#"{"x": [1, 1, 2, 0], "y": [0, 0], "s": [1, 1, 0, 0], "kappa": 1, "tau": 1}"#,
    );
    let out = socp(&[&"check", &"--problem", &problem, &"--point", &point]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["interior"], false);
    assert!(v["d2"].is_null());
    assert_eq!(v["in_n2"], false);
}

#[test]
fn warmstart_from_exact_solution_saves_iterations() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let sol = d.path("sol.json");
    assert_eq!(socp(&[&"solve", &"--problem", &problem, &"--output", &sol]).status.code(), Some(0));
    let (warm, report) = (d.path("warm.json"), d.path("report.json"));
    let out = socp(&[
        &"warmstart", &"--prev-problem", &problem, &"--prev-solution", &sol, &"--problem", &problem,
        &"--omega", &"auto", &"--output", &warm, &"--report", &report,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&report);
    assert!(r["fallback_reason"].is_null());
    let cold = r["cold"]["iterations"].as_i64().unwrap();
    let warm_iters = r["warm"]["iterations"].as_i64().unwrap();
    assert!(warm_iters < cold);
    assert_eq!(r["measured_saving"].as_i64().unwrap(), cold - warm_iters);
    assert_eq!(json(&warm)["status"], "optimal");
}

#[test]
fn warmstart_clamps_fixed_omega_to_admissible_range() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let sol = d.path("sol.json");
    socp(&[&"solve", &"--problem", &problem, &"--output", &sol]);
    let (warm, report) = (d.path("warm.json"), d.path("report.json"));
    let out = socp(&[
        &"warmstart", &"--prev-problem", &problem, &"--prev-solution", &sol, &"--problem", &problem,
        &"--omega", &"0", &"--output", &warm, &"--report", &report,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&report);
    // omega is clamped up to omega_min, so the warm solve never does worse.
    assert!(r["warm"]["iterations"].as_i64() <= r["cold"]["iterations"].as_i64());
}

#[test]
fn bench_without_perturbation_never_loses() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let report = d.path("bench.json");
    let out = socp(&[&"bench", &"--base-problem", &problem, &"--steps", &"3", &"--seed", &"4", &"--report", &report]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&report);
    let steps = r["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    for s in steps {
        assert!(s["warm_iterations"].as_u64() <= s["cold_iterations"].as_u64());
        assert_eq!(s["da_norm"].as_f64(), Some(0.0));
    }
}

#[test]
fn bench_respects_perturbation_bounds() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let report = d.path("bench.json");
    let out = socp(&[
        &"bench", &"--base-problem", &problem, &"--steps", &"2", &"--perturb-a", &"1e-3", &"--perturb-b", &"2e-3",
        &"--perturb-c", &"3e-3", &"--seed", &"9", &"--report", &report,
    ]);
    assert_eq!(out.status.code(), Some(0));
    for s in json(&report)["steps"].as_array().unwrap() {
        assert!(s["da_norm"].as_f64().unwrap() <= 1e-3);
        assert!(s["db_norm"].as_f64().unwrap() <= 2e-3);
        assert!(s["dc_norm"].as_f64().unwrap() <= 3e-3);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = Dir::new();
    let problem = d.file("soc.json", SOC);
    let run = |tag: &str| {
        let (sol, trace, bench) = (d.path(&format!("s{tag}")), d.path(&format!("t{tag}")), d.path(&format!("b{tag}")));
        socp(&[&"solve", &"--problem", &problem, &"--scaling", &"nt", &"--output", &sol, &"--trace", &trace]);
        socp(&[
            &"bench", &"--base-problem", &problem, &"--steps", &"2", &"--perturb-a", &"1e-3", &"--perturb-b", &"1e-3",
            &"--perturb-c", &"1e-3", &"--seed", &"11", &"--report", &bench,
        ]);
        [sol, trace, bench].map(|p| fs::read(p).unwrap())
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn input_errors_exit_with_two() {
    let d = Dir::new();
    let problem = d.file("lp.json", HAND_LP);
    let output = d.path("sol.json");

    let missing = socp(&[&"solve", &"--problem", &d.path("nope.json"), &"--output", &output]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(error_doc(&missing)["exit_code"], 2);

    let bad = d.file("bad.json", &HAND_LP.replace("[0, 1, 1.0]", "[0, 5, 1.0]"));
    let out = socp(&[&"solve", &"--problem", &bad, &"--output", &output]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_doc(&out)["message"].as_str().unwrap().contains("(0, 5)"));

    let out = socp(&[&"solve", &"--problem", &problem, &"--output", &output, &"--scaling", &"cholesky"]);
    assert_eq!(out.status.code(), Some(2));

    let out = socp(&[&"solve", &"--problem", &problem, &"--output", &output, &"--gamma", &"0.01", &"--delta", &"0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_doc(&out)["error"], "params");

    let out = socp(&[
        &"warmstart", &"--prev-problem", &problem, &"--prev-solution", &problem, &"--problem", &problem,
        &"--omega", &"1.5", &"--output", &output,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iteration_limit_exits_with_three() {
    let d = Dir::new();
    let problem = d.file("lp.json", HAND_LP);
    let output = d.path("sol.json");
    let out = socp(&[&"solve", &"--problem", &problem, &"--output", &output, &"--max-iter", &"5"]);
    assert_eq!(out.status.code(), Some(3));
    let e = error_doc(&out);
    assert_eq!(e["error"], "numerical");
    assert!(!output.exists());
}
