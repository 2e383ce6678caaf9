// SPDX-License-Identifier: Apache-2.0

//! Dense joint tables over small sets of binary variables.
//!
//! A table over scope `(X_0, ..., X_{k-1})` stores `2^k` probabilities. State
//! index bits encode the assignment with the last scope variable as the least
//! significant bit, so index 0 is "all false" and `2^k - 1` is "all true".

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Constraint, ConstraintSet, Literal, NeighborGraph, VarId, Variable};

/// Largest scope a dense table may have.
pub const MAX_SCOPE: usize = 20;

/// Probability below which a conditioning event is treated as impossible.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Default tolerance for the independence checks.
pub const DEFAULT_CI_TOL: f64 = 1e-6;

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("scope of {0} variables exceeds the limit of {MAX_SCOPE}")]
    ScopeTooLarge(usize),
    #[error("scope is empty")]
    EmptyScope,
    #[error("variable #{0} appears twice in a scope")]
    DuplicateVariable(usize),
    #[error("variable #{0} is not in the table scope")]
    NotInScope(usize),
    #[error("conditioning event has probability {0:e}")]
    ZeroProbability(f64),
    #[error("invalid table: {0}")]
    Invalid(String),
}

fn check_scope(scope: &[VarId]) -> Result<(), DistError> {
    if scope.is_empty() {
        return Err(DistError::EmptyScope);
    }
    if scope.len() > MAX_SCOPE {
        return Err(DistError::ScopeTooLarge(scope.len()));
    }
    for (i, v) in scope.iter().enumerate() {
        if scope[..i].contains(v) {
            return Err(DistError::DuplicateVariable(v.0));
        }
    }
    Ok(())
}

/// A conjunction of literals compiled against a scope.
#[derive(Clone, Copy, Debug)]
pub struct Event {
    mask: usize,
    want: usize,
    impossible: bool,
}

impl Event {
    pub fn matches(&self, state: usize) -> bool {
        !self.impossible && state & self.mask == self.want
    }

    pub fn is_impossible(&self) -> bool {
        self.impossible
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    scope: Vec<VarId>,
    probs: Vec<f64>,
}

impl JointTable {
    /// Wraps a probability vector, checking length, sign and normalization.
    pub fn new(scope: Vec<VarId>, probs: Vec<f64>) -> Result<Self, DistError> {
        check_scope(&scope)?;
        if probs.len() != 1 << scope.len() {
            return Err(DistError::Invalid(format!(
                "{} probabilities for a scope of {} variables",
                probs.len(),
                scope.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(DistError::Invalid(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(DistError::Invalid(format!("entries sum to {sum}")));
        }
        Ok(JointTable { scope, probs })
    }

    /// Normalizes nonnegative weights into a table.
    pub fn from_weights(scope: Vec<VarId>, weights: Vec<f64>) -> Result<Self, DistError> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(DistError::Invalid(format!("weights sum to {sum}")));
        }
        JointTable::new(scope, weights.into_iter().map(|w| w / sum).collect())
    }

    pub(crate) fn from_raw(scope: Vec<VarId>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << scope.len());
        JointTable { scope, probs }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.scope.iter().position(|&s| s == v)
    }

    /// Bit of `v` in a state index, as a mask.
    pub fn bit(&self, v: VarId) -> Result<usize, DistError> {
        let pos = self.position(v).ok_or(DistError::NotInScope(v.0))?;
        Ok(1 << (self.scope.len() - 1 - pos))
    }

    pub fn event(&self, literals: &[Literal]) -> Result<Event, DistError> {
        let mut ev = Event { mask: 0, want: 0, impossible: false };
        for lit in literals {
            let b = self.bit(lit.var)?;
            let w = if lit.positive { b } else { 0 };
            if ev.mask & b != 0 && ev.want & b != w {
                ev.impossible = true;
            }
            ev.mask |= b;
            ev.want |= w;
        }
        Ok(ev)
    }

    pub fn event_prob(&self, literals: &[Literal]) -> Result<f64, DistError> {
        let ev = self.event(literals)?;
        Ok(self.mass(|s| ev.matches(s)))
    }

    pub(crate) fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub(crate) fn mass(&self, pred: impl Fn(usize) -> bool) -> f64 {
        self.probs.iter().enumerate().filter(|(s, _)| pred(*s)).map(|(_, p)| p).sum()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// Index of the `sub` assignment contained in `state`.
    fn project_state(&self, state: usize, bits: &[usize]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(state & b != 0))
    }

    pub fn marginalize(&self, sub: &[VarId]) -> Result<JointTable, DistError> {
        check_scope(sub)?;
        let bits = sub.iter().map(|&v| self.bit(v)).collect::<Result<Vec<_>, _>>()?;
        let mut out = vec![0.0; 1 << sub.len()];
        for (s, p) in self.probs.iter().enumerate() {
            out[self.project_state(s, &bits)] += p;
        }
        Ok(JointTable { scope: sub.to_vec(), probs: out })
    }

    /// `P(target | given)`.
    pub fn conditional(&self, target: Literal, given: &[Literal]) -> Result<f64, DistError> {
        let denom = self.event_prob(given)?;
        if denom < ZERO_FLOOR {
            return Err(DistError::ZeroProbability(denom));
        }
        let mut joint = given.to_vec();
        joint.push(target);
        Ok(self.event_prob(&joint)? / denom)
    }

    /// Current value of a constraint's probability; `None` when a conditional
    /// is undefined because its condition has no mass.
    pub fn constraint_value(&self, c: &Constraint) -> Result<Option<f64>, DistError> {
        match c {
            Constraint::Marginal(m) => self.event_prob(&m.literals).map(Some),
            Constraint::Conditional(c) => match self.conditional(Literal::pos(c.target), &c.condition) {
                Ok(p) => Ok(Some(p)),
                Err(DistError::ZeroProbability(_)) => Ok(None),
                Err(e) => Err(e),
            },
        }
    }

    /// Applies `f(state)` as a multiplicative factor to every entry.
    pub(crate) fn scaled(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        self.probs.iter().enumerate().map(|(s, p)| p * f(s)).collect()
    }

    /// Text form: a `scope` header, then `<bits> <probability>` per state.
    pub fn to_text(&self, vars: &[Variable]) -> String {
        let mut out = String::from("scope");
        for v in &self.scope {
            let _ = write!(out, " {}", vars.get(v.0).map(|v| v.name.as_str()).unwrap_or("?"));
        }
        out.push('\n');
        let k = self.scope.len();
        for (s, p) in self.probs.iter().enumerate() {
            let _ = writeln!(out, "{:0width$b} {:.6}", s, p, width = k);
        }
        out
    }

    /// The probabilities as one tab separated row.
    pub fn to_tsv_row(&self) -> String {
        self.probs.iter().map(|p| format!("{p:.6}")).collect::<Vec<_>>().join("\t")
    }
}

/// Uniform table over `scope`.
pub fn uniform(scope: &[VarId]) -> Result<JointTable, DistError> {
    check_scope(scope)?;
    let n = 1usize << scope.len();
    Ok(JointTable { scope: scope.to_vec(), probs: vec![1.0 / n as f64; n] })
}

/// Linear row over the states of `scope` whose product with `p` is zero
/// exactly when `p` satisfies `c`:
/// conditional `(1 - mu) * [E and x] - mu * [E and not x]`,
/// marginal `[E] - v`.
pub fn encode_row(scope: &[VarId], c: &Constraint) -> Result<Vec<f64>, DistError> {
    let shape = JointTable::from_raw(scope.to_vec(), vec![0.0; 1 << scope.len()]);
    let n = shape.len();
    match c {
        Constraint::Marginal(m) => {
            let ev = shape.event(&m.literals)?;
            Ok((0..n).map(|s| f64::from(u8::from(ev.matches(s))) - m.value).collect())
        }
        Constraint::Conditional(c) => {
            let ev = shape.event(&c.condition)?;
            let xb = shape.bit(c.target)?;
            Ok((0..n)
                .map(|s| match (ev.matches(s), s & xb != 0) {
                    (false, _) => 0.0,
                    (true, true) => 1.0 - c.value,
                    (true, false) => -c.value,
                })
                .collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub constraint: usize,
    pub current: Option<f64>,
    pub target: f64,
}

impl ResidualEntry {
    /// `current - target`, or `None` when the conditional is undefined.
    pub fn residual(&self) -> Option<f64> {
        self.current.map(|c| c - self.target)
    }

    /// Scheduling magnitude; an undefined conditional counts as 1.
    pub fn magnitude(&self) -> f64 {
        self.residual().map_or(1.0, f64::abs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
    /// `sum(p) - 1`.
    pub universal: f64,
}

impl ResidualReport {
    pub fn max_magnitude(&self) -> f64 {
        self.entries.iter().map(ResidualEntry::magnitude).fold(self.universal.abs(), f64::max)
    }

    /// Entry with the largest magnitude; ties go to the earliest constraint.
    pub fn worst(&self) -> Option<&ResidualEntry> {
        self.entries.iter().fold(None, |best: Option<&ResidualEntry>, e| match best {
            Some(b) if b.magnitude() >= e.magnitude() => Some(b),
            _ => Some(e),
        })
    }
}

pub fn residual_entry(table: &JointTable, index: usize, c: &Constraint) -> Result<ResidualEntry, DistError> {
    Ok(ResidualEntry { constraint: index, current: table.constraint_value(c)?, target: c.value() })
}

/// Residual of every constraint on the conditional-probability scale.
pub fn residuals(table: &JointTable, cs: &ConstraintSet) -> Result<ResidualReport, DistError> {
    let entries = cs.iter().enumerate().map(|(i, c)| residual_entry(table, i, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(ResidualReport { entries, universal: table.sum() - 1.0 })
}

fn assignments(vars: &[VarId]) -> impl Iterator<Item = Vec<Literal>> + '_ {
    (0..1usize << vars.len()).map(move |s| {
        vars.iter()
            .enumerate()
            .map(|(i, &v)| Literal { var: v, positive: s & (1 << (vars.len() - 1 - i)) != 0 })
            .collect()
    })
}

/// Tests `x` independent of `y` given `given`, skipping conditioning
/// assignments of probability at most `tol`.
pub fn check_ci(table: &JointTable, x: VarId, y: VarId, given: &[VarId], tol: f64) -> Result<bool, DistError> {
    for v in [x, y].iter().chain(given) {
        table.bit(*v)?;
    }
    for g in assignments(given) {
        let pg = table.event_prob(&g)?;
        if pg <= tol {
            continue;
        }
        for (xv, yv) in [(true, true), (true, false), (false, true), (false, false)] {
            let lx = Literal { var: x, positive: xv };
            let ly = Literal { var: y, positive: yv };
            let mut both = g.clone();
            both.extend([lx, ly]);
            let mut only_x = g.clone();
            only_x.push(lx);
            let mut only_y = g.clone();
            only_y.push(ly);
            let pxy = table.event_prob(&both)? / pg;
            let px = table.event_prob(&only_x)? / pg;
            let py = table.event_prob(&only_y)? / pg;
            if (pxy - px * py).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Tests the local Markov property: each variable is independent of the rest
/// given its neighbors.
pub fn check_mrf(table: &JointTable, graph: &NeighborGraph, tol: f64) -> Result<bool, DistError> {
    for node in &graph.nodes {
        table.bit(node.id)?;
    }
    for &x in table.scope() {
        let xb = table.bit(x)?;
        let mut local: Vec<VarId> = graph.neighbors(x).into_iter().collect();
        local.push(x);
        let blanket = table.marginalize(&local)?;
        let local_bits = local.iter().map(|&v| table.bit(v)).collect::<Result<Vec<_>, _>>()?;
        for s0 in (0..table.len()).filter(|s| s & xb == 0) {
            let s1 = s0 | xb;
            let rest = table.probs[s0] + table.probs[s1];
            if rest <= ZERO_FLOOR {
                continue;
            }
            let full = table.probs[s1] / rest;
            let b0 = table.project_state(s0, &local_bits);
            let b1 = table.project_state(s1, &local_bits);
            let local_mass = blanket.probs[b0] + blanket.probs[b1];
            let reduced = if local_mass > 0.0 { blanket.probs[b1] / local_mass } else { 0.0 };
            if (full - reduced).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
