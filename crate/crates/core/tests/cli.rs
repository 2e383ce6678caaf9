// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;

fn path(name: &str) -> String {
    model_path(name).to_string_lossy().into_owned()
}

#[test]
fn every_shipped_file_validates() {
    let dir = model_path("");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let (code, out, err) = run_cli(&["validate", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{}: {err}", p.display());
        assert!(out.starts_with("ok"), "{out}");
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn check_exit_codes() {
    assert_eq!(run_cli(&["check", &path("mining.cn")]).0, 0);
    let (code, out, _) = run_cli(&["check", &path("inconsistent-quad.cn")]);
    assert_eq!(code, 1);
    assert!(out.starts_with("inconsistent"));
    let (code, out, _) = run_cli(&["check", &path("two-clique-contradiction.cn"), "--local"]);
    assert_eq!(code, 1);
    assert!(out.contains("culprit {B,C} against {A,B}"), "{out}");
}

#[test]
fn witness_is_printed_on_request() {
    let (code, out, _) = run_cli(&["check", &path("two-way.cn"), "--witness"]);
    assert_eq!(code, 0);
    let w = table_values(&out);
    assert_eq!(w.len(), 4);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-5);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run_cli(&["frobnicate"]).0, 2);
    assert_eq!(run_cli(&["solve"]).0, 2);
    assert_eq!(run_cli(&["solve", &path("two-way.cn"), "--method", "dual", "--trace"]).0, 2);
    assert_eq!(run_cli(&["solve", "/nonexistent/model.cn"]).0, 2);
    assert_eq!(run_cli(&["query", &path("mining.cn"), "--event", "Z"]).0, 2);
    assert_eq!(run_cli(&["dsep", &path("mining.cn"), "--x", "A", "--y", "A"]).0, 2);
    assert_eq!(run_cli(&["--help"]).0, 0);
}

#[test]
fn solve_methods_agree() {
    let mut tables = Vec::new();
    for method in ["dual", "successive", "decomposed"] {
        let (code, out, err) =
            run_cli(&["solve", &path("two-way.cn"), "--method", method, "--tol", "1e-9", "--max-cycles", "1000"]);
        assert_eq!(code, 0, "{method}: {err}");
        tables.push(table_values(&out));
    }
    assert!(max_gap(&tables[0], &tables[1]) < 1e-5);
    assert!(max_gap(&tables[0], &tables[2]) < 1e-5);
}

#[test]
fn tsv_has_one_line_per_clique() {
    let (code, out, _) = run_cli(&["solve", &path("mining.cn"), "--format", "tsv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("A,C,D\t"));
    assert!(lines[1].starts_with("B,C,D\t"));
    assert_eq!(lines[0].split('\t').count(), 9);
}

#[test]
fn trace_lists_updates_with_shrinking_residuals() {
    let (code, out, _) = run_cli(&["solve", &path("two-way.cn"), "--trace"]);
    assert_eq!(code, 0);
    let rows: Vec<f64> = out
        .lines()
        .skip_while(|l| !l.starts_with("cycle\t"))
        .skip(1)
        .map(|l| l.rsplit('\t').next().unwrap().parse().unwrap())
        .collect();
    assert!(rows.len() >= 2);
    assert!(rows.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn non_convergence_exits_one() {
    let (code, out, _) =
        run_cli(&["solve", &path("mining.cn"), "--method", "successive", "--max-cycles", "1", "--tol", "1e-12"]);
    assert_eq!(code, 1);
    assert!(out.contains("converged: no"), "{out}");
}

#[test]
fn query_prints_a_probability() {
    let (code, out, _) = run_cli(&["query", &path("mining.cn"), "--event", "A", "--given", "C"]);
    assert_eq!(code, 0);
    let p: f64 = out.trim().parse().unwrap();
    assert!(p > 0.0 && p < 1.0);
    let (_, prior, _) = run_cli(&["query", &path("mining.cn"), "--event", "A"]);
    assert!((prior.trim().parse::<f64>().unwrap() - 0.2).abs() < 1e-5);
}

#[test]
fn dsep_reports_separation() {
    let (code, out, _) = run_cli(&["dsep", &path("mining.cn"), "--x", "A", "--y", "B"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "separated");
    let (_, out, _) = run_cli(&["dsep", &path("mining.cn"), "--x", "A", "--y", "B", "--given", "C"]);
    assert_eq!(out.trim(), "not separated");
}

#[test]
fn annealing_is_deterministic_per_seed() {
    let file = path("six-node.graph");
    let a = run_cli(&["decompose", &file, "--method", "anneal", "--seed", "7"]);
    let b = run_cli(&["decompose", &file, "--method", "anneal", "--seed", "7"]);
    assert_eq!(a, b);
    assert!(a.1.contains("cost: 32"), "{}", a.1);
    let (_, greedy, _) = run_cli(&["decompose", &file]);
    let cost = |s: &str| s.lines().find_map(|l| l.strip_prefix("cost: ")).unwrap().parse::<u64>().unwrap();
    assert!(cost(&a.1) <= cost(&greedy));
}
