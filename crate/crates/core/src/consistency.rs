// SPDX-License-Identifier: Apache-2.0

//! Constraint consistency as linear feasibility over clique state spaces.
//!
//! Every constraint becomes a homogeneous linear row over the states of a
//! scope. A set of constraints is consistent when some nonnegative,
//! normalized vector satisfies all rows. The global check works over the
//! full joint; the local check works clique by clique along a
//! running-intersection order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dist::{encode_row, uniform, DistError, JointTable};
use crate::graphops::{graham_acyclic, Decomposition, VarSet};
use crate::model::{ConstraintSet, Model, VarId};

/// Largest variable count accepted by [`global_consistent`].
pub const GLOBAL_CAP: usize = 12;

/// Feasibility tolerance of the linear programs.
pub const LP_TOL: f64 = 1e-9;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsistencyError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("{0} variables exceed the global check limit of {GLOBAL_CAP}; use the local check")]
    TooLarge(usize),
    #[error("decomposition is not an acyclic hypergraph")]
    NotAcyclic,
    #[error("constraint {0} does not fit inside any clique")]
    Uncovered(usize),
    #[error("subscope variable #{0} is not in the solution space scope")]
    NotInScope(usize),
    #[error("linear program did not terminate")]
    IterationLimit,
}

/// Homogeneous linear rows over the states of `scope`; the normalization
/// row `sum(p) = 1` is implied and kept out of `rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub scope: Vec<VarId>,
    pub rows: Vec<Vec<f64>>,
    /// Index of the constraint each row encodes.
    pub provenance: Vec<usize>,
}

impl LinearSystem {
    pub fn width(&self) -> usize {
        1 << self.scope.len()
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.width();
        // pad to a square or taller matrix so the SVD yields a full right basis
        let m = self.rows.len().max(n);
        DMatrix::from_fn(m, n, |i, j| self.rows.get(i).map_or(0.0, |r| r[j]))
    }

    pub fn rank(&self) -> usize {
        if self.rows.is_empty() {
            return 0;
        }
        let svd = checked_svd(&self.matrix());
        svd.rank()
    }
}

/// Thin SVD `m = u diag(s) v_t`.
struct Svd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v_t: DMatrix<f64>,
}

impl Svd {
    fn significant(&self) -> impl Iterator<Item = usize> + '_ {
        let top = self.s.iter().copied().fold(0.0, f64::max);
        (0..self.s.len()).filter(move |&k| self.s[k] > RANK_TOL * top.max(1.0))
    }

    fn rank(&self) -> usize {
        self.significant().count()
    }

    fn error(&self, m: &DMatrix<f64>) -> f64 {
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.s));
        (&self.u * sigma * &self.v_t - m).norm()
    }
}

/// nalgebra's default convergence threshold leaves errors near 1e-8 and
/// square rank-deficient inputs can come back wrong outright, so square
/// matrices get a zero row appended and the result is checked.
fn checked_svd(m: &DMatrix<f64>) -> Svd {
    let run = |a: DMatrix<f64>| {
        let svd = a.try_svd(true, true, f64::EPSILON, 0).expect("unbounded iterations");
        Svd {
            u: svd.u.expect("left singular vectors requested"),
            s: svd.singular_values.iter().copied().collect(),
            v_t: svd.v_t.expect("right singular vectors requested"),
        }
    };
    let mut svd = if m.is_square() {
        let mut padded = run(m.clone().insert_row(m.nrows(), 0.0));
        padded.u = padded.u.remove_row(m.nrows());
        padded
    } else {
        run(m.clone())
    };
    let e = svd.error(m);
    if e > 1e-12 * m.norm().max(1.0) {
        let t = run(m.transpose());
        let flipped = Svd { u: t.v_t.transpose(), s: t.s, v_t: t.u.transpose() };
        if flipped.error(m) < e {
            svd = flipped;
        }
    }
    svd
}

/// Encodes every constraint of `cs` whose variables lie in `scope`.
pub fn to_linear(cs: &ConstraintSet, scope: &[VarId]) -> Result<LinearSystem, DistError> {
    uniform(scope)?;
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    for (i, c) in cs.within(scope) {
        rows.push(encode_row(scope, c)?);
        provenance.push(i);
    }
    Ok(LinearSystem { scope: scope.to_vec(), rows, provenance })
}

/// Null space of a homogeneous system, given by an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSpace {
    pub scope: Vec<VarId>,
    pub basis: Vec<Vec<f64>>,
}

impl SolutionSpace {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Least-squares distance from `v` to the space.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let mut rest = v.to_vec();
        for b in &self.basis {
            let c: f64 = b.iter().zip(v).map(|(x, y)| x * y).sum();
            for (r, x) in rest.iter_mut().zip(b) {
                *r -= c * x;
            }
        }
        rest.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.distance(v) <= tol
    }
}

pub fn solution_space(ls: &LinearSystem) -> SolutionSpace {
    let n = ls.width();
    if ls.rows.is_empty() {
        let basis = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        return SolutionSpace { scope: ls.scope.clone(), basis };
    }
    let svd = checked_svd(&ls.matrix());
    let kept: BTreeSet<usize> = svd.significant().collect();
    let basis = (0..n).filter(|k| !kept.contains(k)).map(|k| svd.v_t.row(k).iter().copied().collect()).collect();
    SolutionSpace { scope: ls.scope.clone(), basis }
}

/// Sums the entries of `v` (over `scope`) that agree on `sub`.
pub fn marginalize_vector(scope: &[VarId], v: &[f64], sub: &[VarId]) -> Result<Vec<f64>, ConsistencyError> {
    if let Some(v) = sub.iter().find(|v| !scope.contains(v)) {
        return Err(ConsistencyError::NotInScope(v.0));
    }
    Ok(JointTable::from_raw(scope.to_vec(), v.to_vec()).marginalize(sub)?.probs().to_vec())
}

/// Image of a solution space under marginalization onto `sub`, as an
/// orthonormal spanning set.
pub fn project_space(ss: &SolutionSpace, sub: &[VarId]) -> Result<SolutionSpace, ConsistencyError> {
    let images = ss.basis.iter().map(|b| marginalize_vector(&ss.scope, b, sub)).collect::<Result<Vec<_>, _>>()?;
    let n = 1usize << sub.len();
    if images.is_empty() {
        return Ok(SolutionSpace { scope: sub.to_vec(), basis: Vec::new() });
    }
    let cols = images.len().max(n);
    let m = DMatrix::from_fn(n, cols, |i, j| images.get(j).map_or(0.0, |v| v[i]));
    let svd = checked_svd(&m);
    let basis = svd.significant().map(|k| svd.u.column(k).iter().copied().collect()).collect();
    Ok(SolutionSpace { scope: sub.to_vec(), basis })
}

/// Finds `x >= 0` with `a x = b` by the phase-one simplex method with
/// Bland's rule, or `None` when the system is infeasible.
pub fn feasible_point(a: &[Vec<f64>], b: &[f64]) -> Result<Option<Vec<f64>>, ConsistencyError> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = sign * b[i];
    }
    // objective row holds reduced costs of minimizing the artificial sum
    for j in 0..n {
        t[m][j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
    }
    t[m][width - 1] = -(0..m).map(|i| t[i][width - 1]).sum::<f64>();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let limit = 50 * (n + m + 10) * (m + 10);
    let mut iterations = 0;
    loop {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -LP_TOL) else { break };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > LP_TOL {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    Some(l) => {
                        let best = t[l][width - 1] / t[l][enter];
                        if ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                    None => Some(i),
                };
            }
        }
        let Some(r) = leave else { break };
        let pivot = t[r][enter];
        for x in t[r].iter_mut() {
            *x /= pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != 0.0 {
                    for (x, p) in row.iter_mut().zip(&pivot_row) {
                        *x -= f * p;
                    }
                }
            }
        }
        basis[r] = enter;
        iterations += 1;
        if iterations > limit {
            return Err(ConsistencyError::IterationLimit);
        }
    }
    if -t[m][width - 1] > LP_TOL {
        return Ok(None);
    }
    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1].max(0.0);
        }
    }
    Ok(Some(x))
}

/// Rows of a joint feasibility problem over several cliques whose tables
/// are laid out one after another.
struct CliqueProgram {
    cliques: Vec<Vec<VarId>>,
    offsets: Vec<usize>,
    width: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl CliqueProgram {
    fn new(cs: &ConstraintSet, cliques: &[VarSet]) -> Result<Self, ConsistencyError> {
        let cliques: Vec<Vec<VarId>> = cliques.iter().map(|c| c.iter().copied().collect()).collect();
        let mut offsets = Vec::new();
        let mut width = 0;
        for c in &cliques {
            offsets.push(width);
            width += 1 << c.len();
        }
        let mut prog = CliqueProgram { cliques, offsets, width, rows: Vec::new(), rhs: Vec::new() };
        for k in 0..prog.cliques.len() {
            let ls = to_linear(cs, &prog.cliques[k])?;
            for r in &ls.rows {
                prog.push_block(k, r, 0.0);
            }
            let ones = vec![1.0; 1 << prog.cliques[k].len()];
            prog.push_block(k, &ones, 1.0);
        }
        Ok(prog)
    }

    fn push_block(&mut self, k: usize, coeffs: &[f64], rhs: f64) {
        let mut row = vec![0.0; self.width];
        row[self.offsets[k]..self.offsets[k] + coeffs.len()].copy_from_slice(coeffs);
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Equal marginals of cliques `i` and `j` on their shared variables.
    fn calibrate(&mut self, i: usize, j: usize) -> Result<(), ConsistencyError> {
        let shared: Vec<VarId> = self.cliques[i].iter().copied().filter(|v| self.cliques[j].contains(v)).collect();
        if shared.is_empty() {
            return Ok(());
        }
        let maps = [i, j].map(|k| {
            let table = JointTable::from_raw(self.cliques[k].clone(), vec![0.0; 1 << self.cliques[k].len()]);
            let bits: Vec<usize> = shared.iter().map(|&v| table.bit(v).expect("shared variable in clique")).collect();
            (0..table.len())
                .map(|s| bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(s & b != 0)))
                .collect::<Vec<usize>>()
        });
        for t in 0..1usize << shared.len() {
            let mut row = vec![0.0; self.width];
            for (s, &proj) in maps[0].iter().enumerate() {
                if proj == t {
                    row[self.offsets[i] + s] += 1.0;
                }
            }
            for (s, &proj) in maps[1].iter().enumerate() {
                if proj == t {
                    row[self.offsets[j] + s] -= 1.0;
                }
            }
            self.rows.push(row);
            self.rhs.push(0.0);
        }
        Ok(())
    }

    fn solve(&self) -> Result<Option<Vec<JointTable>>, ConsistencyError> {
        let Some(x) = feasible_point(&self.rows, &self.rhs)? else { return Ok(None) };
        let tables = self
            .cliques
            .iter()
            .zip(&self.offsets)
            .map(|(c, &o)| JointTable::from_weights(c.clone(), x[o..o + (1 << c.len())].to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(tables))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

/// The clique, or clique pair, where feasibility first failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Culprit {
    pub clique: VarSet,
    pub partner: Option<VarSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    /// Outcome of the null-space pre-test, when one was run.
    pub rank_test: Option<bool>,
    /// Each checked clique with the number of constraints inside it.
    pub cliques: Vec<(VarSet, usize)>,
    /// A feasible table per clique when consistent.
    pub witness: Vec<JointTable>,
    pub culprit: Option<Culprit>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }

    /// Verdict line, per-clique constraint counts, culprit and, when
    /// requested, the witness tables.
    pub fn to_text(&self, model: &Model, with_witness: bool) -> String {
        let set = |s: &VarSet| format!("{{{}}}", s.iter().map(|&v| model.name(v)).collect::<Vec<_>>().join(","));
        let mut out = String::new();
        out.push_str(if self.is_consistent() { "consistent\n" } else { "inconsistent\n" });
        if let Some(r) = self.rank_test {
            let _ = writeln!(out, "rank test: {}", if r { "nontrivial null space" } else { "only the zero solution" });
        }
        for (c, n) in &self.cliques {
            let _ = writeln!(out, "clique {} constraints {n}", set(c));
        }
        if let Some(c) = &self.culprit {
            match &c.partner {
                Some(p) => {
                    let _ = writeln!(out, "culprit {} against {}", set(&c.clique), set(p));
                }
                None => {
                    let _ = writeln!(out, "culprit {}", set(&c.clique));
                }
            }
        }
        if with_witness {
            for t in &self.witness {
                out.push_str(&t.to_text(&model.variables));
            }
        }
        out
    }
}

fn count_within(cs: &ConstraintSet, clique: &VarSet) -> usize {
    let scope: Vec<VarId> = clique.iter().copied().collect();
    cs.within(&scope).count()
}

/// Feasibility over the full joint, after the null-space pre-test.
pub fn global_consistent(model: &Model) -> Result<ConsistencyReport, ConsistencyError> {
    let scope = model.ids();
    if scope.len() > GLOBAL_CAP {
        return Err(ConsistencyError::TooLarge(scope.len()));
    }
    let all: VarSet = scope.iter().copied().collect();
    let cliques = vec![(all.clone(), model.constraints.len())];
    let ls = to_linear(&model.constraints, &scope)?;
    let nontrivial = ls.rank() < ls.width();
    let inconsistent = |rank_test| ConsistencyReport {
        verdict: Verdict::Inconsistent,
        rank_test: Some(rank_test),
        cliques: cliques.clone(),
        witness: Vec::new(),
        culprit: Some(Culprit { clique: all.clone(), partner: None }),
    };
    if !nontrivial {
        return Ok(inconsistent(false));
    }
    match CliqueProgram::new(&model.constraints, std::slice::from_ref(&all))?.solve()? {
        Some(witness) => Ok(ConsistencyReport {
            verdict: Verdict::Consistent,
            rank_test: Some(true),
            cliques,
            witness,
            culprit: None,
        }),
        None => Ok(inconsistent(true)),
    }
}

/// Whether the two cliques admit tables satisfying their own constraints
/// that agree on the shared variables. Returns the two tables if so.
pub fn pairwise_consistent(
    model: &Model,
    clique_i: &VarSet,
    clique_j: &VarSet,
) -> Result<Option<(JointTable, JointTable)>, ConsistencyError> {
    let mut prog = CliqueProgram::new(&model.constraints, &[clique_i.clone(), clique_j.clone()])?;
    prog.calibrate(0, 1)?;
    Ok(prog.solve()?.map(|mut t| {
        let second = t.pop().expect("two tables");
        (t.pop().expect("two tables"), second)
    }))
}

/// Clique-by-clique check along the running-intersection order. Step `i`
/// solves the feasibility problem over cliques `0..=i` with every join edge
/// calibrated, so a failure first appearing at step `i` is reported against
/// clique `i` and its anchor.
pub fn local_check(model: &Model, d: &Decomposition) -> Result<ConsistencyReport, ConsistencyError> {
    if !graham_acyclic(&d.hypergraph()) {
        return Err(ConsistencyError::NotAcyclic);
    }
    for (i, c) in model.constraints.iter().enumerate() {
        let scope: BTreeSet<VarId> = c.scope().into_iter().collect();
        if !d.cliques.iter().any(|k| scope.is_subset(k)) {
            return Err(ConsistencyError::Uncovered(i));
        }
    }
    let cliques: Vec<(VarSet, usize)> =
        d.cliques.iter().map(|c| (c.clone(), count_within(&model.constraints, c))).collect();
    let mut witness = Vec::new();
    for i in 0..d.cliques.len() {
        let mut prog = CliqueProgram::new(&model.constraints, &d.cliques[..=i])?;
        for l in 1..=i {
            let anchor = d.anchors[l].expect("later cliques have anchors");
            prog.calibrate(l, anchor)?;
        }
        match prog.solve()? {
            Some(tables) => witness = tables,
            None => {
                let culprit =
                    Culprit { clique: d.cliques[i].clone(), partner: d.anchors[i].map(|j| d.cliques[j].clone()) };
                return Ok(ConsistencyReport {
                    verdict: Verdict::Inconsistent,
                    rank_test: None,
                    cliques,
                    witness: Vec::new(),
                    culprit: Some(culprit),
                });
            }
        }
    }
    Ok(ConsistencyReport { verdict: Verdict::Consistent, rank_test: None, cliques, witness, culprit: None })
}
