// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use maxent_cycles::dist::JointTable;
use maxent_cycles::graphops::{Hypergraph, VarSet};
use maxent_cycles::model::{parse_model, Model, VarId};
use rand::Rng;

pub const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

pub fn load(name: &str) -> Model {
    parse_model(&std::fs::read_to_string(model_path(name)).unwrap()).unwrap()
}

pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("maxent-cycles").chain(args.iter().copied());
    let code = maxent_cycles::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Probabilities from `<bits> <p>` lines of the text table format.
pub fn table_values(text: &str) -> Vec<f64> {
    text.lines()
        .filter_map(|l| {
            let mut parts = l.split_whitespace();
            let bits = parts.next()?;
            let p = parts.next()?;
            if bits.chars().all(|c| c == '0' || c == '1') && parts.next().is_none() {
                p.parse().ok()
            } else {
                None
            }
        })
        .collect()
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_table<R: Rng>(rng: &mut R, scope: Vec<VarId>) -> JointTable {
    let w = (0..1usize << scope.len()).map(|_| rng.random_range(0.05..1.0)).collect();
    JointTable::from_weights(scope, w).unwrap()
}

fn literal_text<R: Rng>(rng: &mut R, v: usize) -> String {
    if rng.random_bool(0.5) {
        NAMES[v].to_string()
    } else {
        format!("~{}", NAMES[v])
    }
}

/// Random model over 4 to 6 variables. With `consistent`, every value is
/// read off one random positive joint; otherwise values are drawn freely.
pub fn random_model<R: Rng>(rng: &mut R, consistent: bool) -> Model {
    let n = rng.random_range(4..=6);
    let vars: Vec<VarId> = (0..n).map(VarId).collect();
    let joint = random_table(rng, vars);
    let mut lines = vec![format!("vars {}", NAMES[..n].join(" "))];
    let mut seen = BTreeSet::new();
    let count = rng.random_range(2..=6);
    while lines.len() <= count {
        let x = rng.random_range(0..n);
        let mut others: Vec<usize> = (0..n).filter(|&v| v != x).collect();
        let k = rng.random_range(0..=2);
        let mut cond = Vec::new();
        for _ in 0..k {
            let i = rng.random_range(0..others.len());
            cond.push(others.swap_remove(i));
        }
        let body = if rng.random_bool(0.8) && !cond.is_empty() {
            let c: Vec<String> = cond.iter().map(|&v| literal_text(rng, v)).collect();
            format!("{}|{}", NAMES[x], c.join(","))
        } else {
            let mut lits = vec![literal_text(rng, x)];
            lits.extend(cond.iter().map(|&v| literal_text(rng, v)));
            lits.join(",")
        };
        if !seen.insert(body.clone()) {
            continue;
        }
        let probe = parse_model(&format!("{}\nP({body})=0.5", lines[0])).unwrap();
        let value = if consistent {
            joint.constraint_value(probe.constraints.get(0).unwrap()).unwrap().unwrap()
        } else {
            rng.random_range(0.05..0.95)
        };
        lines.push(format!("P({body})={value}"));
        // a negated target can land on an already used cell
        if parse_model(&lines.join("\n")).is_err() {
            lines.pop();
        }
    }
    parse_model(&lines.join("\n")).unwrap()
}

pub fn random_hypergraph<R: Rng>(rng: &mut R) -> Hypergraph {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=6);
    let edges = (0..m)
        .map(|_| {
            let size = rng.random_range(1..=4.min(n));
            let mut e = VarSet::new();
            while e.len() < size {
                e.insert(VarId(rng.random_range(0..n)));
            }
            e
        })
        .collect();
    Hypergraph::new(edges)
}
