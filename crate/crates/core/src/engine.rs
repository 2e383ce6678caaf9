// SPDX-License-Identifier: Apache-2.0

//! Decomposed successive updating over the cliques of an acyclic
//! decomposition, with separator propagation and per-cycle snapshots.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dist::{residual_entry, uniform, DistError, Event, JointTable, ResidualEntry, ZERO_FLOOR};
use crate::graphops::{decompose, graham_acyclic, Decomposition, FillMethod, GraphError};
use crate::mce::{
    conditional_factors, jeffrey_factors, mce_dual_solve, MceError, SolverOptions, UpdateError, UpdateTrace,
};
use crate::model::{Constraint, Literal, Model, VarId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Mce(#[from] MceError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("constraint #{constraint}: {source}")]
    Update { constraint: usize, source: UpdateError },
    #[error("propagation into clique {clique}: {source}")]
    Propagation { clique: usize, source: UpdateError },
    #[error("decomposition is not an acyclic hypergraph")]
    NotAcyclic,
    #[error("constraint #{0} does not fit inside any clique")]
    Uncovered(usize),
    #[error("query variables do not fit in a single clique; multi-clique evidence propagation is not supported")]
    SpansCliques,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliqueState {
    pub clique: Vec<VarId>,
    pub table: JointTable,
    /// Constraints owned by this clique, by index.
    pub assigned: Vec<usize>,
}

/// Link from a clique to its running-intersection anchor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinEdge {
    pub child: usize,
    pub parent: usize,
    pub separator: Vec<VarId>,
}

/// Clique tables at the end of a cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub cycle: usize,
    pub tables: Vec<JointTable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub cliques: Vec<CliqueState>,
    pub edges: Vec<JoinEdge>,
    pub snapshots: Vec<Snapshot>,
    /// Final residual of every constraint, in declaration order.
    pub residuals: Vec<ResidualEntry>,
    pub converged: bool,
    pub steps: usize,
    pub trace: UpdateTrace,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(ResidualEntry::magnitude).fold(0.0, f64::max)
    }

    pub fn snapshot(&self, cycle: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.cycle == cycle)
    }

    /// Largest disagreement between the two ends of any join edge.
    pub fn calibration_gap(&self) -> Result<f64, DistError> {
        let mut gap: f64 = 0.0;
        for e in &self.edges {
            if e.separator.is_empty() {
                continue;
            }
            let a = self.cliques[e.child].table.marginalize(&e.separator)?;
            let b = self.cliques[e.parent].table.marginalize(&e.separator)?;
            for (x, y) in a.probs().iter().zip(b.probs()) {
                gap = gap.max((x - y).abs());
            }
        }
        Ok(gap)
    }

    fn summary(&self) -> String {
        format!(
            "converged: {}\nupdates: {}\nmax residual: {:.6e}\n",
            if self.converged { "yes" } else { "no" },
            self.steps,
            self.max_residual()
        )
    }

    pub fn to_text(&self, model: &Model) -> String {
        let mut out = String::new();
        for c in &self.cliques {
            out.push_str(&c.table.to_text(&model.variables));
        }
        out.push_str(&self.summary());
        out
    }

    /// One row per clique: variable names, then probabilities.
    pub fn to_tsv(&self, model: &Model) -> String {
        let mut out = String::new();
        for c in &self.cliques {
            let names: Vec<&str> = c.clique.iter().map(|&v| model.name(v)).collect();
            let _ = writeln!(out, "{}\t{}", names.join(","), c.table.to_tsv_row());
        }
        out
    }
}

/// Rescales `table` so its marginal on the scope of `new_marginal` becomes
/// `new_marginal`; the minimum-cross-entropy update for a full marginal.
pub fn subset_marginal_update(table: &JointTable, new_marginal: &JointTable) -> Result<JointTable, UpdateError> {
    let proj = projection(table, new_marginal.scope())?;
    let mut out = table.clone();
    let mut scratch = vec![0.0; new_marginal.len()];
    rescale(out.probs_mut(), &proj, new_marginal.probs(), &mut scratch)?;
    Ok(out)
}

fn layout(model: &Model, d: &Decomposition) -> Result<(Vec<CliqueState>, Vec<JoinEdge>), EngineError> {
    if !graham_acyclic(&d.hypergraph()) {
        return Err(EngineError::NotAcyclic);
    }
    let mut cliques = d
        .cliques
        .iter()
        .map(|c| {
            let scope: Vec<VarId> = c.iter().copied().collect();
            Ok(CliqueState { table: uniform(&scope)?, clique: scope, assigned: Vec::new() })
        })
        .collect::<Result<Vec<_>, DistError>>()?;
    for (i, c) in model.constraints.iter().enumerate() {
        let scope = c.scope();
        let home =
            d.cliques.iter().position(|k| scope.iter().all(|v| k.contains(v))).ok_or(EngineError::Uncovered(i))?;
        cliques[home].assigned.push(i);
    }
    let edges = d
        .anchors
        .iter()
        .enumerate()
        .filter_map(|(child, a)| a.map(|parent| (child, parent)))
        .map(|(child, parent)| JoinEdge {
            child,
            parent,
            separator: d.cliques[child].intersection(&d.cliques[parent]).copied().collect(),
        })
        .collect();
    Ok((cliques, edges))
}

/// A constraint compiled against its clique's table.
#[derive(Clone, Copy, Debug)]
enum Compiled {
    Marginal { ev: Event, value: f64 },
    Conditional { ev: Event, xbit: usize, value: f64 },
}

impl Compiled {
    fn new(table: &JointTable, c: &Constraint) -> Result<Self, DistError> {
        Ok(match c {
            Constraint::Marginal(m) => Compiled::Marginal { ev: table.event(&m.literals)?, value: m.value },
            Constraint::Conditional(cc) => {
                Compiled::Conditional { ev: table.event(&cc.condition)?, xbit: table.bit(cc.target)?, value: cc.value }
            }
        })
    }

    /// Residual magnitude on the conditional scale; an undefined conditional counts as 1.
    fn magnitude(&self, p: &[f64]) -> f64 {
        match *self {
            Compiled::Marginal { ev, value } => {
                let pe: f64 = p.iter().enumerate().filter(|(s, _)| ev.matches(*s)).map(|(_, x)| x).sum();
                (pe - value).abs()
            }
            Compiled::Conditional { ev, xbit, value } => {
                let (mut pe, mut px) = (0.0, 0.0);
                for (s, x) in p.iter().enumerate() {
                    if ev.matches(s) {
                        pe += x;
                        if s & xbit != 0 {
                            px += x;
                        }
                    }
                }
                if pe < ZERO_FLOOR {
                    1.0
                } else {
                    (px / pe - value).abs()
                }
            }
        }
    }

    fn apply(&self, p: &mut [f64]) -> Result<(), UpdateError> {
        match *self {
            Compiled::Marginal { ev, value } => {
                let pe = p.iter().enumerate().filter(|(s, _)| ev.matches(*s)).map(|(_, x)| x).sum();
                let (inside, outside) = jeffrey_factors(pe, value)?;
                for (s, x) in p.iter_mut().enumerate() {
                    *x *= if ev.matches(s) { inside } else { outside };
                }
            }
            Compiled::Conditional { ev, xbit, value } => {
                let (mut q0, mut q1) = (0.0, 0.0);
                for (s, x) in p.iter().enumerate() {
                    if ev.matches(s) {
                        if s & xbit != 0 {
                            q1 += x;
                        } else {
                            q0 += x;
                        }
                    }
                }
                let (f0, f1) = conditional_factors(q0, q1, value)?;
                for (s, x) in p.iter_mut().enumerate() {
                    if ev.matches(s) {
                        *x *= if s & xbit != 0 { f1 } else { f0 };
                    }
                }
            }
        }
        let sum: f64 = p.iter().sum();
        for x in p.iter_mut() {
            *x /= sum;
        }
        Ok(())
    }
}

/// Maps each state of `table` to the index of its restriction to `sub`.
fn projection(table: &JointTable, sub: &[VarId]) -> Result<Vec<usize>, DistError> {
    let bits = sub.iter().map(|&v| table.bit(v)).collect::<Result<Vec<_>, _>>()?;
    Ok((0..table.len()).map(|s| bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(s & b != 0))).collect())
}

fn marginal_into(p: &[f64], proj: &[usize], out: &mut [f64]) {
    out.fill(0.0);
    for (x, &i) in p.iter().zip(proj) {
        out[i] += x;
    }
}

/// Rescales `p` in place so its marginal under `proj` becomes `want`.
fn rescale(p: &mut [f64], proj: &[usize], want: &[f64], scratch: &mut [f64]) -> Result<(), UpdateError> {
    marginal_into(p, proj, scratch);
    for (now, &w) in scratch.iter_mut().zip(want) {
        *now = if *now <= ZERO_FLOOR {
            if w > ZERO_FLOOR {
                return Err(UpdateError::Unreachable);
            }
            0.0
        } else {
            w / *now
        };
    }
    for (x, &i) in p.iter_mut().zip(proj) {
        *x *= scratch[i];
    }
    Ok(())
}

/// One separator push: `(from, to, projection of from, projection of to, separator states)`.
type Push = (usize, usize, Vec<usize>, Vec<usize>, usize);

/// Breadth-first pushes away from each clique across the join tree.
fn sweeps(cliques: &[CliqueState], edges: &[JoinEdge]) -> Result<Vec<Vec<Push>>, DistError> {
    let mut all = Vec::with_capacity(cliques.len());
    for from in 0..cliques.len() {
        let mut seen = vec![false; cliques.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        let mut pushes = Vec::new();
        while let Some(k) = queue.pop_front() {
            for e in edges {
                let next = if e.child == k {
                    e.parent
                } else if e.parent == k {
                    e.child
                } else {
                    continue;
                };
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                queue.push_back(next);
                if !e.separator.is_empty() {
                    let a = projection(&cliques[k].table, &e.separator)?;
                    let b = projection(&cliques[next].table, &e.separator)?;
                    pushes.push((k, next, a, b, 1 << e.separator.len()));
                }
            }
        }
        all.push(pushes);
    }
    Ok(all)
}

/// Successive updating on the cliques of `d`, starting from uniform tables.
///
/// Each step applies the constraint with the largest residual to its clique
/// and propagates the change through the join tree. Every `n` steps, `n`
/// being the number of constraints, close a cycle and record a snapshot.
pub fn solve_decomposed(model: &Model, d: &Decomposition, opts: &SolverOptions) -> Result<SolveReport, EngineError> {
    opts.validate()?;
    let (mut cliques, edges) = layout(model, d)?;
    let n = model.constraints.len();
    let mut home = vec![0; n];
    let mut compiled = Vec::with_capacity(n);
    for (i, c) in model.constraints.iter().enumerate() {
        let k = cliques.iter().position(|s| s.assigned.contains(&i)).expect("every constraint assigned");
        home[i] = k;
        compiled.push(Compiled::new(&cliques[k].table, c)?);
    }
    let sweeps = sweeps(&cliques, &edges)?;
    let widest = sweeps.iter().flatten().map(|p| p.4).max().unwrap_or(0);
    let (mut sep, mut scratch) = (vec![0.0; widest], vec![0.0; widest]);
    let mut trace = UpdateTrace::default();
    let mut snapshots = Vec::new();
    let mut mags = vec![0.0; n];
    let mut steps = 0;
    while steps < opts.max_cycles * n {
        for (i, m) in mags.iter_mut().enumerate() {
            *m = compiled[i].magnitude(cliques[home[i]].table.probs());
        }
        // largest residual, ties to the earliest constraint
        let (i, before) = mags.iter().enumerate().fold((0, mags[0]), |b, (i, &m)| if m > b.1 { (i, m) } else { b });
        if before <= opts.tolerance {
            break;
        }
        let k = home[i];
        compiled[i]
            .apply(cliques[k].table.probs_mut())
            .map_err(|source| EngineError::Update { constraint: i, source })?;
        trace.record(steps / n + 1, i, before, &cliques[k].table);
        for (from, to, pa, pb, w) in &sweeps[k] {
            marginal_into(cliques[*from].table.probs(), pa, &mut sep[..*w]);
            rescale(cliques[*to].table.probs_mut(), pb, &sep[..*w], &mut scratch[..*w])
                .map_err(|source| EngineError::Propagation { clique: *to, source })?;
        }
        steps += 1;
        if steps % n == 0 {
            snapshots.push(Snapshot { cycle: steps / n, tables: cliques.iter().map(|c| c.table.clone()).collect() });
        }
    }
    let mut residuals = Vec::with_capacity(n);
    for (i, c) in model.constraints.iter().enumerate() {
        residuals.push(residual_entry(&cliques[home[i]].table, i, c)?);
    }
    let converged = residuals.iter().all(|e| e.magnitude() <= opts.tolerance);
    Ok(SolveReport { cliques, edges, snapshots, residuals, converged, steps, trace })
}

/// `P(event | given)` read from the first clique holding every variable
/// involved; `given` may be empty.
pub fn query(report: &SolveReport, event: &[Literal], given: &[Literal]) -> Result<f64, EngineError> {
    let clique = report
        .cliques
        .iter()
        .find(|c| event.iter().chain(given).all(|l| c.clique.contains(&l.var)))
        .ok_or(EngineError::SpansCliques)?;
    let mut joint = event.to_vec();
    joint.extend_from_slice(given);
    let both = clique.table.event_prob(&joint)?;
    if given.is_empty() {
        return Ok(both);
    }
    let denom = clique.table.event_prob(given)?;
    if denom <= ZERO_FLOOR {
        return Err(DistError::ZeroProbability(denom).into());
    }
    Ok(both / denom)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub tolerance: f64,
    pub repetitions: usize,
    /// Best wall time of the full-joint dual solve.
    pub dual: Duration,
    /// Best wall time of decomposition plus decomposed successive solve.
    pub decomposed: Duration,
    /// `dual / decomposed`.
    pub ratio: f64,
    /// Largest per-state gap between clique tables and the dual joint's marginals.
    pub max_deviation: f64,
    pub decomposed_converged: bool,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        format!(
            "tolerance: {:e}\nrepetitions: {}\ndual (full joint): {:.3} us\ndecomposed successive: {:.3} us\nspeedup: {:.2}x\n\
             max deviation: {:.6e}\ndecomposed converged: {}\n",
            self.tolerance,
            self.repetitions,
            self.dual.as_secs_f64() * 1e6,
            self.decomposed.as_secs_f64() * 1e6,
            self.ratio,
            self.max_deviation,
            if self.decomposed_converged { "yes" } else { "no" }
        )
    }
}

/// Times the full-joint dual solve against greedy decomposition plus
/// decomposed successive updating, both to `opts.tolerance`; each method is
/// run `repetitions` times and its fastest run is kept.
pub fn bench(model: &Model, opts: &SolverOptions, repetitions: usize) -> Result<BenchReport, EngineError> {
    opts.validate()?;
    let repetitions = repetitions.max(1);
    let vars = model.ids();
    let dual_opts = SolverOptions { max_iterations: opts.max_iterations.max(1000), ..opts.clone() };

    let mut dual_best = Duration::MAX;
    let mut joint = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let prior = uniform(&vars)?;
        let solved = mce_dual_solve(&prior, &model.constraints, &dual_opts)?;
        dual_best = dual_best.min(start.elapsed());
        joint = Some(solved);
    }
    let joint = joint.expect("at least one repetition");

    let mut dec_best = Duration::MAX;
    let mut report = None;
    for _ in 0..repetitions {
        let start = Instant::now();
        let d = decompose(model, &FillMethod::Greedy)?;
        let r = solve_decomposed(model, &d, opts)?;
        dec_best = dec_best.min(start.elapsed());
        report = Some(r);
    }
    let report = report.expect("at least one repetition");

    let mut max_deviation: f64 = 0.0;
    for c in &report.cliques {
        let exact = joint.marginalize(&c.clique)?;
        for (x, y) in exact.probs().iter().zip(c.table.probs()) {
            max_deviation = max_deviation.max((x - y).abs());
        }
    }
    let ratio = dual_best.as_secs_f64() / dec_best.as_secs_f64().max(1e-12);
    Ok(BenchReport {
        tolerance: opts.tolerance,
        repetitions,
        dual: dual_best,
        decomposed: dec_best,
        ratio,
        max_deviation,
        decomposed_converged: report.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mce::{apply_constraint, successive_solve};
    use crate::model::parse_model;

    const MINING: &str = "vars A B C D\nP(A)=0.2\nP(B)=0.7\nP(C|A,D)=0.6\nP(C|~A,D)=0.2\nP(C|A,~D)=0.2\n\
                          P(C|~A,~D)=0.1\nP(D|B,C)=0.8\nP(D|~B,C)=0.3\nP(D|B,~C)=0.4\nP(D|~B,~C)=0.2";

    const EXACT_ACD: [f64; 8] = [0.4479, 0.2419, 0.0498, 0.0604, 0.0862, 0.0369, 0.0216, 0.0553];
    const EXACT_BCD: [f64; 8] = [0.1857, 0.0464, 0.0474, 0.0203, 0.3484, 0.2323, 0.0239, 0.0954];

    fn close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?} (tol {tol})");
        }
    }

    fn solved(text: &str, opts: &SolverOptions) -> (Model, SolveReport) {
        let m = parse_model(text).unwrap();
        let d = decompose(&m, &FillMethod::Greedy).unwrap();
        let r = solve_decomposed(&m, &d, opts).unwrap();
        (m, r)
    }

    #[test]
    fn marginal_update_examples() {
        let m = parse_model("vars B C D").unwrap();
        let t = uniform(&m.ids()).unwrap();
        let same = subset_marginal_update(&t, &t.marginalize(&m.vars("C,D").unwrap()).unwrap()).unwrap();
        close(same.probs(), t.probs(), 1e-15);

        let cd = JointTable::new(m.vars("C,D").unwrap(), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let out = subset_marginal_update(&t, &cd).unwrap();
        close(out.probs(), &[0.2, 0.15, 0.1, 0.05, 0.2, 0.15, 0.1, 0.05], 1e-15);

        // (C,D) marginal of the exact ACD table
        let cd_exact = [
            EXACT_ACD[0] + EXACT_ACD[4],
            EXACT_ACD[1] + EXACT_ACD[5],
            EXACT_ACD[2] + EXACT_ACD[6],
            EXACT_ACD[3] + EXACT_ACD[7],
        ];
        close(&cd_exact, &[0.5341, 0.2788, 0.0714, 0.1157], 1e-12);
        let target = JointTable::from_weights(m.vars("C,D").unwrap(), cd_exact.to_vec()).unwrap();
        let out = subset_marginal_update(&t, &target).unwrap();
        close(out.marginalize(&m.vars("C,D").unwrap()).unwrap().probs(), target.probs(), 1e-15);
    }

    #[test]
    fn marginal_update_rejects_unreachable_mass() {
        let m = parse_model("vars A B").unwrap();
        let t = JointTable::new(m.ids(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let a = JointTable::new(m.vars("A").unwrap(), vec![0.5, 0.5]).unwrap();
        assert_eq!(subset_marginal_update(&t, &a), Err(UpdateError::Unreachable));
    }

    #[test]
    fn mining_reaches_the_exact_tables() {
        let (_, r) = solved(MINING, &SolverOptions::successive().with_tolerance(1e-6));
        assert!(r.converged);
        assert_eq!(r.cliques.len(), 2);
        assert_eq!(r.cliques[0].assigned, vec![0, 2, 3, 4, 5]);
        assert_eq!(r.cliques[1].assigned, vec![1, 6, 7, 8, 9]);
        close(r.cliques[0].table.probs(), &EXACT_ACD, 2e-4);
        close(r.cliques[1].table.probs(), &EXACT_BCD, 2e-4);
        assert!(r.calibration_gap().unwrap() < 1e-12);
        assert!(r.snapshots.len() >= 5);
    }

    /// Replays the trace with the table-level operations and checks that each
    /// step took the largest residual of its moment.
    #[test]
    fn schedule_picks_the_largest_residual() {
        let (m, r) = solved(MINING, &SolverOptions::successive());
        let d = decompose(&m, &FillMethod::Greedy).unwrap();
        let (mut cliques, edges) = layout(&m, &d).unwrap();
        for e in &r.trace.events {
            let max = cliques
                .iter()
                .flat_map(|c| {
                    c.assigned.iter().map(|&i| residual_entry(&c.table, i, m.constraints.get(i).unwrap()).unwrap())
                })
                .map(|r| r.magnitude())
                .fold(0.0, f64::max);
            assert!((e.residual_before - max).abs() < 1e-13);
            let k = cliques.iter().position(|c| c.assigned.contains(&e.constraint)).unwrap();
            cliques[k].table = apply_constraint(&cliques[k].table, m.constraints.get(e.constraint).unwrap()).unwrap();
            let other = 1 - k;
            let sep = &edges[0].separator;
            let marginal = cliques[k].table.marginalize(sep).unwrap();
            cliques[other].table = subset_marginal_update(&cliques[other].table, &marginal).unwrap();
        }
        for (a, b) in cliques.iter().zip(&r.cliques) {
            close(a.table.probs(), b.table.probs(), 1e-12);
        }
    }

    #[test]
    fn single_clique_matches_successive_solve() {
        let opts = SolverOptions::successive().with_tolerance(1e-10);
        let (m, r) = solved("vars A B\nP(A|B)=0.7\nP(B|A)=0.8", &opts);
        assert!(r.edges.is_empty());
        let direct = successive_solve(&uniform(&m.ids()).unwrap(), &m.constraints, &opts).unwrap();
        close(r.cliques[0].table.probs(), direct.table.probs(), 1e-12);
        assert_eq!(r.trace.len(), direct.trace.len());
    }

    #[test]
    fn queries() {
        let (m, r) = solved("vars A B\nP(A|B)=0.7\nP(B|A)=0.8", &SolverOptions::successive().with_tolerance(1e-8));
        let a = m.literals("A").unwrap();
        assert!((query(&r, &a, &[]).unwrap() - 0.5356).abs() < 2e-3);
        let b = m.literals("B").unwrap();
        assert!((query(&r, &a, &b).unwrap() - 0.7).abs() < 1e-7);
        assert_eq!(query(&r, &m.literals("A,~A").unwrap(), &[]).unwrap(), 0.0);

        let (m, r) = solved(MINING, &SolverOptions::successive());
        assert!((query(&r, &m.literals("C,D").unwrap(), &[]).unwrap() - 0.1157).abs() < 5e-3);
        assert_eq!(query(&r, &m.literals("A,B").unwrap(), &[]), Err(EngineError::SpansCliques));
    }

    #[test]
    fn layout_errors() {
        let m = parse_model("vars A B C\nP(A|B)=0.5\nP(B|C)=0.5\nP(C|A)=0.5").unwrap();
        let mut d = decompose(&m, &FillMethod::Greedy).unwrap();
        d.cliques = vec![[VarId(0), VarId(1)].into(), [VarId(1), VarId(2)].into(), [VarId(0), VarId(2)].into()];
        d.anchors = vec![None, Some(0), Some(0)];
        assert_eq!(solve_decomposed(&m, &d, &SolverOptions::default()), Err(EngineError::NotAcyclic));
        d.cliques = vec![[VarId(0), VarId(1)].into(), [VarId(1), VarId(2)].into()];
        d.anchors = vec![None, Some(0)];
        assert_eq!(solve_decomposed(&m, &d, &SolverOptions::default()), Err(EngineError::Uncovered(2)));
    }

    #[test]
    fn empty_model_is_uniform() {
        let (_, r) = solved("vars A B", &SolverOptions::default());
        assert!(r.converged);
        assert_eq!(r.steps, 0);
        close(r.cliques[0].table.probs(), &[0.5, 0.5], 0.0);
    }

    #[test]
    fn bench_agrees_with_the_dual() {
        let m = parse_model("vars A B\nP(A|B)=0.7\nP(B|A)=0.8").unwrap();
        let b = bench(&m, &SolverOptions::successive().with_tolerance(1e-7), 1).unwrap();
        assert!(b.max_deviation < 1e-4);
        assert!(b.decomposed_converged);
        let m = parse_model("vars A B").unwrap();
        let b = bench(&m, &SolverOptions::successive(), 1).unwrap();
        assert_eq!(b.max_deviation, 0.0);
        assert!(b.to_text().contains("speedup"));
    }
}
