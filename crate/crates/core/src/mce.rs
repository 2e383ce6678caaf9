// SPDX-License-Identifier: Apache-2.0

//! Minimum-cross-entropy updating.
//!
//! Two routes to the same answer:
//!
//! - [`mce_dual_solve`] minimizes the convex dual `log sum_s q_s exp(lambda . a_s)`
//!   over one multiplier per constraint with nonlinear conjugate gradients.
//! - [`successive_solve`] applies one constraint at a time with the closed
//!   forms [`jeffrey_update`] and [`conditional_update`], each of which is the
//!   exact I-projection onto its single constraint.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dist::{encode_row, residuals, DistError, JointTable, ZERO_FLOOR};
use crate::model::{ConditionalConstraint, Constraint, ConstraintSet, MarginalConstraint, Model};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpdateError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("conditioning event has zero prior mass ({0:e})")]
    EmptyCondition(f64),
    #[error("constraint requires mass on an event the prior rules out")]
    Unreachable,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MceError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("constraint #{constraint}: {source}")]
    Update { constraint: usize, source: UpdateError },
    #[error("prior must be strictly positive for the dual solver")]
    PriorNotPositive,
    #[error("no convergence after {iterations} iterations (max residual {residual:e}); constraints may be inconsistent or on the boundary")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

/// Order in which successive updating visits constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Always apply the constraint with the largest residual; ties go to the
    /// earliest declared constraint.
    GradientThreshold,
    /// Declaration order, one pass per cycle.
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Largest residual magnitude accepted as converged.
    pub tolerance: f64,
    /// Iteration cap for the dual solver.
    pub max_iterations: usize,
    /// Cycle cap for successive updating; a cycle is one application per constraint.
    pub max_cycles: usize,
    pub schedule: Schedule,
}

impl SolverOptions {
    pub fn dual() -> Self {
        SolverOptions { tolerance: 1e-8, max_iterations: 500, max_cycles: 100, schedule: Schedule::GradientThreshold }
    }

    pub fn successive() -> Self {
        SolverOptions { tolerance: 1e-4, max_iterations: 500, max_cycles: 100, schedule: Schedule::GradientThreshold }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<(), MceError> {
        if !(self.tolerance > 0.0) {
            return Err(MceError::InvalidOptions(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 || self.max_cycles == 0 {
            return Err(MceError::InvalidOptions("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::successive()
    }
}

/// One constraint application.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateEvent {
    /// 1-based cycle the application belongs to.
    pub cycle: usize,
    pub constraint: usize,
    pub residual_before: f64,
    /// `sum_s (s + 1) * p_s` over the updated table, as a cheap fingerprint.
    pub checksum: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateTrace {
    pub events: Vec<UpdateEvent>,
}

impl UpdateTrace {
    pub(crate) fn record(&mut self, cycle: usize, constraint: usize, residual_before: f64, after: &JointTable) {
        let checksum = after.probs().iter().enumerate().map(|(s, p)| (s + 1) as f64 * p).sum();
        self.events.push(UpdateEvent { cycle, constraint, residual_before, checksum });
    }

    /// Tab separated `cycle  constraint  residual-before` lines.
    pub fn to_tsv(&self, model: &Model) -> String {
        let mut out = String::from("cycle\tconstraint\tresidual_before\n");
        for e in &self.events {
            let _ = writeln!(out, "{}\t{}\t{:.6e}", e.cycle, model.constraint_text(e.constraint), e.residual_before);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

fn normalized(scope: &[crate::model::VarId], w: Vec<f64>) -> JointTable {
    let sum: f64 = w.iter().sum();
    JointTable::from_raw(scope.to_vec(), w.into_iter().map(|x| x / sum).collect())
}

/// Factors for states inside and outside an event of mass `pe` so that its
/// mass becomes `v`.
pub(crate) fn jeffrey_factors(pe: f64, v: f64) -> Result<(f64, f64), UpdateError> {
    if pe <= ZERO_FLOOR {
        if v > 0.0 {
            return Err(UpdateError::Unreachable);
        }
        Ok((0.0, 1.0))
    } else if 1.0 - pe <= ZERO_FLOOR {
        if v < 1.0 {
            return Err(UpdateError::Unreachable);
        }
        Ok((1.0, 0.0))
    } else {
        Ok((v / pe, (1.0 - v) / (1.0 - pe)))
    }
}

/// Jeffrey's rule: rescale the event and its complement so `P(E) = v`.
pub fn jeffrey_update(prior: &JointTable, mc: &MarginalConstraint) -> Result<JointTable, UpdateError> {
    let ev = prior.event(&mc.literals)?;
    let pe = prior.mass(|s| ev.matches(s));
    let (inside, outside) = jeffrey_factors(pe, mc.value)?;
    let w = prior.scaled(|s| if ev.matches(s) { inside } else { outside });
    Ok(normalized(prior.scope(), w))
}

/// Factors for the states of `E` with `x` false and with `x` true, given
/// `q0 = Q(E, not x)` and `q1 = Q(E, x)`.
pub(crate) fn conditional_factors(q0: f64, q1: f64, mu: f64) -> Result<(f64, f64), UpdateError> {
    if q0 + q1 <= ZERO_FLOOR {
        return Err(UpdateError::EmptyCondition(q0 + q1));
    }
    if mu >= 1.0 {
        if q1 <= 0.0 {
            return Err(UpdateError::Unreachable);
        }
        Ok((0.0, 1.0))
    } else if mu <= 0.0 {
        if q0 <= 0.0 {
            return Err(UpdateError::Unreachable);
        }
        Ok((1.0, 0.0))
    } else {
        if q0 <= 0.0 || q1 <= 0.0 {
            return Err(UpdateError::Unreachable);
        }
        let t = ((1.0 - mu) * q1) / (mu * q0);
        Ok((t.powf(mu), t.powf(mu - 1.0)))
    }
}

/// Closed-form I-projection onto `P(x | E) = mu`.
///
/// With `q1 = Q(E, x)` and `q0 = Q(E, not x)`, states in `E` are scaled by
/// `t^mu` (x false) or `t^(mu - 1)` (x true), `t = (1 - mu) q1 / (mu q0)`;
/// states outside `E` only see the normalizer. `mu` of 0 or 1 conditions hard.
pub fn conditional_update(prior: &JointTable, cc: &ConditionalConstraint) -> Result<JointTable, UpdateError> {
    let ev = prior.event(&cc.condition)?;
    let xb = prior.bit(cc.target)?;
    let q1 = prior.mass(|s| ev.matches(s) && s & xb != 0);
    let q0 = prior.mass(|s| ev.matches(s) && s & xb == 0);
    let (f0, f1) = conditional_factors(q0, q1, cc.value)?;
    let w = prior.scaled(|s| match (ev.matches(s), s & xb != 0) {
        (false, _) => 1.0,
        (true, false) => f0,
        (true, true) => f1,
    });
    Ok(normalized(prior.scope(), w))
}

/// Applies the matching closed-form update for `c`.
pub fn apply_constraint(table: &JointTable, c: &Constraint) -> Result<JointTable, UpdateError> {
    match c {
        Constraint::Conditional(cc) => conditional_update(table, cc),
        Constraint::Marginal(mc) => jeffrey_update(table, mc),
    }
}

/// Dual of the cross-entropy problem with every constraint written as a
/// homogeneous row `a_k . p = 0`:
/// `g(lambda) = log sum_s q_s exp(sum_k lambda_k a_ks)`.
///
/// `g` is convex, its gradient is the row values under
/// `p(lambda) ∝ q exp(lambda . a)`, and its minimizer gives the projection.
#[derive(Clone, Debug)]
pub struct DualObjective {
    log_prior: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl DualObjective {
    pub fn new(prior: &JointTable, cs: &ConstraintSet) -> Result<Self, DistError> {
        let rows = cs.iter().map(|c| encode_row(prior.scope(), c)).collect::<Result<Vec<_>, _>>()?;
        Ok(DualObjective { log_prior: prior.probs().iter().map(|p| p.ln()).collect(), rows })
    }

    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    fn exponents(&self, lambda: &[f64]) -> Vec<f64> {
        let mut e = self.log_prior.clone();
        for (row, &l) in self.rows.iter().zip(lambda) {
            if l != 0.0 {
                for (x, a) in e.iter_mut().zip(row) {
                    *x += l * a;
                }
            }
        }
        e
    }

    pub fn value(&self, lambda: &[f64]) -> f64 {
        let e = self.exponents(lambda);
        let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + e.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    }

    /// The primal distribution `p(lambda)`.
    pub fn distribution(&self, lambda: &[f64]) -> Vec<f64> {
        let e = self.exponents(lambda);
        let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = e.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    fn gradient_at(&self, p: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().zip(p).map(|(a, q)| a * q).sum()).collect()
    }

    pub fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        self.gradient_at(&self.distribution(lambda))
    }

    /// First and second derivative of `g(lambda + alpha d)` at `alpha`.
    fn directional(&self, lambda: &[f64], d: &[f64], alpha: f64) -> (f64, f64, f64) {
        let at: Vec<f64> = lambda.iter().zip(d).map(|(l, d)| l + alpha * d).collect();
        let p = self.distribution(&at);
        let mut u = vec![0.0; p.len()];
        for (row, &dk) in self.rows.iter().zip(d) {
            for (x, a) in u.iter_mut().zip(row) {
                *x += dk * a;
            }
        }
        let mean: f64 = u.iter().zip(&p).map(|(x, q)| x * q).sum();
        let second: f64 = u.iter().zip(&p).map(|(x, q)| q * (x - mean) * (x - mean)).sum();
        (self.value(&at), mean, second)
    }

    /// Damped Newton minimization of the convex slice along `d`. A step is
    /// kept when it lowers the value or the slope magnitude, since near the
    /// optimum value changes fall below rounding.
    fn line_search(&self, lambda: &[f64], d: &[f64]) -> f64 {
        let (mut phi, mut slope, mut curv) = self.directional(lambda, d, 0.0);
        let slope0 = slope.abs();
        let mut alpha = 0.0;
        for _ in 0..60 {
            if curv <= 1e-300 || slope.abs() <= 1e-13 * slope0 {
                break;
            }
            let mut step = -slope / curv;
            let mut accepted = false;
            for _ in 0..60 {
                let (phi_new, s_new, c_new) = self.directional(lambda, d, alpha + step);
                if phi_new.is_finite() && (phi_new < phi || s_new.abs() < slope.abs()) {
                    alpha += step;
                    phi = phi_new;
                    slope = s_new;
                    curv = c_new;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.abs() <= 1e-16 * alpha.abs().max(1.0) {
                break;
            }
        }
        alpha
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact minimum-cross-entropy projection of `prior` onto `cs`.
pub fn mce_dual_solve(prior: &JointTable, cs: &ConstraintSet, opts: &SolverOptions) -> Result<JointTable, MceError> {
    opts.validate()?;
    if prior.probs().iter().any(|&p| p <= 0.0) {
        return Err(MceError::PriorNotPositive);
    }
    let dual = DualObjective::new(prior, cs)?;
    let k = dual.dimension();
    let scope = prior.scope().to_vec();
    if k == 0 {
        return Ok(prior.clone());
    }
    let mut lambda = vec![0.0; k];
    let mut p = dual.distribution(&lambda);
    let mut grad = dual.gradient_at(&p);
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut worst = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let table = JointTable::from_raw(scope.clone(), p.clone());
        worst = residuals(&table, cs)?.max_magnitude();
        if worst <= opts.tolerance {
            return Ok(table);
        }
        let alpha = dual.line_search(&lambda, &dir);
        for (l, d) in lambda.iter_mut().zip(&dir) {
            *l += alpha * d;
        }
        p = dual.distribution(&lambda);
        let next = dual.gradient_at(&p);
        // Polak-Ribiere with restarts every k steps
        let denom = dot(&grad, &grad);
        let mut beta = if denom > 0.0 { (dot(&next, &next) - dot(&next, &grad)) / denom } else { 0.0 };
        if beta < 0.0 || (it + 1) % k == 0 {
            beta = 0.0;
        }
        for (d, g) in dir.iter_mut().zip(&next) {
            *d = -g + beta * *d;
        }
        if dot(&dir, &next) >= 0.0 {
            for (d, g) in dir.iter_mut().zip(&next) {
                *d = -g;
            }
        }
        grad = next;
    }
    let table = JointTable::from_raw(scope, p);
    let last = residuals(&table, cs)?.max_magnitude();
    if last <= opts.tolerance {
        return Ok(table);
    }
    Err(MceError::NotConverged { iterations: opts.max_iterations, residual: worst.min(last) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuccessiveOutcome {
    pub table: JointTable,
    pub trace: UpdateTrace,
    pub converged: bool,
    /// Cycles started, counting a partial last cycle.
    pub cycles: usize,
    pub max_residual: f64,
}

/// Successive closed-form updating until every residual is within tolerance.
pub fn successive_solve(
    prior: &JointTable,
    cs: &ConstraintSet,
    opts: &SolverOptions,
) -> Result<SuccessiveOutcome, MceError> {
    opts.validate()?;
    let n = cs.len();
    let mut table = prior.clone();
    let mut trace = UpdateTrace::default();
    let apply = |table: &JointTable, i: usize| {
        apply_constraint(table, cs.get(i).expect("index in range"))
            .map_err(|source| MceError::Update { constraint: i, source })
    };
    let mut steps = 0;
    match opts.schedule {
        Schedule::GradientThreshold => {
            while steps < opts.max_cycles * n {
                let report = residuals(&table, cs)?;
                let Some(worst) = report.worst() else { break };
                if worst.magnitude() <= opts.tolerance {
                    break;
                }
                let (i, before) = (worst.constraint, worst.magnitude());
                table = apply(&table, i)?;
                trace.record(steps / n + 1, i, before, &table);
                steps += 1;
            }
        }
        Schedule::RoundRobin => {
            for cycle in 1..=opts.max_cycles {
                let report = residuals(&table, cs)?;
                if report.max_magnitude() <= opts.tolerance {
                    break;
                }
                for i in 0..n {
                    let before =
                        crate::dist::residual_entry(&table, i, cs.get(i).expect("index in range"))?.magnitude();
                    table = apply(&table, i)?;
                    trace.record(cycle, i, before, &table);
                    steps += 1;
                }
            }
        }
    }
    let max_residual = residuals(&table, cs)?.max_magnitude();
    Ok(SuccessiveOutcome {
        table,
        trace,
        converged: max_residual <= opts.tolerance,
        cycles: if n == 0 { 0 } else { steps.div_ceil(n) },
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::uniform;
    use crate::model::{parse_model, Literal, VarId};

    const A: VarId = VarId(0);
    const B: VarId = VarId(1);
    const C: VarId = VarId(2);
    const D: VarId = VarId(3);

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?} (tol {tol})");
        }
    }

    fn cycle_model() -> Model {
        parse_model("vars A B\nP(A|B)=0.7\nP(B|A)=0.8").unwrap()
    }

    fn conditional(m: &Model, i: usize) -> &ConditionalConstraint {
        match m.constraints.get(i).unwrap() {
            Constraint::Conditional(c) => c,
            _ => panic!("not conditional"),
        }
    }

    /// Single-row I-projection by bisection on the multiplier.
    fn bisect_projection(prior: &[f64], row: &[f64]) -> Vec<f64> {
        let dist = |l: f64| {
            let w: Vec<f64> = prior.iter().zip(row).map(|(q, a)| q * (l * a).exp()).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect::<Vec<_>>()
        };
        let g = |l: f64| dist(l).iter().zip(row).map(|(p, a)| p * a).sum::<f64>();
        let (mut lo, mut hi) = (-60.0, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        dist(0.5 * (lo + hi))
    }

    #[test]
    fn jeffrey_examples() {
        let m = parse_model("vars A B C D\nP(A)=0.2").unwrap();
        let Constraint::Marginal(mc) = m.constraints.get(0).unwrap() else { panic!() };
        let t = jeffrey_update(&uniform(&[A, B]).unwrap(), mc).unwrap();
        close(t.probs(), &[0.4, 0.4, 0.1, 0.1], 1e-15);

        let t = jeffrey_update(&uniform(&[A, C, D]).unwrap(), mc).unwrap();
        close(t.probs(), &[0.2, 0.2, 0.2, 0.2, 0.05, 0.05, 0.05, 0.05], 1e-15);

        let prior = JointTable::new(vec![A, B], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let same =
            MarginalConstraint::new(vec![Literal::pos(B)], prior.event_prob(&[Literal::pos(B)]).unwrap()).unwrap();
        close(jeffrey_update(&prior, &same).unwrap().probs(), prior.probs(), 1e-15);
    }

    #[test]
    fn jeffrey_boundaries() {
        let prior = JointTable::new(vec![A, B], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let sure = MarginalConstraint::new(vec![Literal::pos(A)], 1.0).unwrap();
        close(jeffrey_update(&prior, &sure).unwrap().probs(), &[0.0, 0.0, 3.0 / 7.0, 4.0 / 7.0], 1e-15);
        let point = JointTable::new(vec![A, B], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let some_a = MarginalConstraint::new(vec![Literal::pos(A)], 0.5).unwrap();
        assert_eq!(jeffrey_update(&point, &some_a), Err(UpdateError::Unreachable));
    }

    #[test]
    fn conditional_update_closed_form() {
        let m = cycle_model();
        let t = conditional_update(&uniform(&[A, B]).unwrap(), conditional(&m, 0)).unwrap();
        let frozen = [0.260279560677588, 0.143832263593447, 0.260279560677588, 0.335608615051377];
        close(t.probs(), &frozen, 1e-14);
        close(t.probs(), &[0.260283, 0.143833, 0.260283, 0.335601], 1e-5);
        let oracle = bisect_projection(&[0.25; 4], &encode_row(&[A, B], m.constraints.get(0).unwrap()).unwrap());
        close(t.probs(), &oracle, 1e-12);
        let p = t.conditional(Literal::pos(A), &[Literal::pos(B)]).unwrap();
        assert!((p - 0.7).abs() <= 1e-12);
    }

    #[test]
    fn conditional_update_is_identity_when_satisfied() {
        let prior = JointTable::new(vec![A, B], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mu = prior.conditional(Literal::pos(A), &[Literal::pos(B)]).unwrap();
        let cc = ConditionalConstraint::new(Literal::pos(A), vec![Literal::pos(B)], mu).unwrap();
        close(conditional_update(&prior, &cc).unwrap().probs(), prior.probs(), 1e-15);
    }

    #[test]
    fn conditional_update_errors_and_boundaries() {
        let prior = JointTable::new(vec![A, B], vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let cc = ConditionalConstraint::new(Literal::pos(A), vec![Literal::pos(B)], 0.5).unwrap();
        assert!(matches!(conditional_update(&prior, &cc), Err(UpdateError::EmptyCondition(_))));

        let prior = JointTable::new(vec![A, B], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let hard = ConditionalConstraint::new(Literal::pos(A), vec![Literal::pos(B)], 1.0).unwrap();
        let t = conditional_update(&prior, &hard).unwrap();
        close(t.probs(), &[0.125, 0.0, 0.375, 0.5], 1e-15);
        let never = ConditionalConstraint::new(Literal::pos(A), vec![Literal::pos(B)], 0.0).unwrap();
        close(conditional_update(&prior, &never).unwrap().probs(), &[0.1 / 0.6, 0.2 / 0.6, 0.3 / 0.6, 0.0], 1e-15);

        let lopsided = JointTable::new(vec![A, B], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(conditional_update(&lopsided, &cc), Err(UpdateError::Unreachable));
    }

    #[test]
    fn interleaved_twice_each_reproduces_printed_values() {
        let m = cycle_model();
        let mut t = uniform(&[A, B]).unwrap();
        for _ in 0..2 {
            t = conditional_update(&t, conditional(&m, 0)).unwrap();
            t = conditional_update(&t, conditional(&m, 1)).unwrap();
        }
        close(t.probs(), &[0.2807, 0.1808, 0.1075, 0.4299], 2e-3);
    }

    #[test]
    fn dual_solves_the_two_cycle() {
        let m = cycle_model();
        let t = mce_dual_solve(&uniform(&[A, B]).unwrap(), &m.constraints, &SolverOptions::dual()).unwrap();
        close(t.probs(), &[0.2808, 0.1836, 0.1071, 0.4285], 1.5e-3);
        assert!(residuals(&t, &m.constraints).unwrap().max_magnitude() <= 1e-8);
        assert!((t.sum() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn dual_with_no_constraints_returns_prior() {
        let u = uniform(&[A, B, C]).unwrap();
        assert_eq!(mce_dual_solve(&u, &ConstraintSet::new(), &SolverOptions::dual()).unwrap(), u);
    }

    #[test]
    fn dual_matches_closed_form_on_one_constraint() {
        let m = parse_model("vars A B\nP(A|B)=0.7").unwrap();
        let u = uniform(&[A, B]).unwrap();
        let dual = mce_dual_solve(&u, &m.constraints, &SolverOptions::dual()).unwrap();
        let closed = conditional_update(&u, conditional(&m, 0)).unwrap();
        close(dual.probs(), closed.probs(), 1e-6);
    }

    #[test]
    fn dual_rejects_zero_prior_and_reports_inconsistency() {
        let m = parse_model("vars A B\nP(A|~B)=0.2\nP(A|B)=0.7\nP(B|~A)=0.1\nP(B|A)=0.8").unwrap();
        let err = mce_dual_solve(&uniform(&[A, B]).unwrap(), &m.constraints, &SolverOptions::dual()).unwrap_err();
        assert!(matches!(err, MceError::NotConverged { .. }), "{err}");
        let zero = JointTable::new(vec![A, B], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(mce_dual_solve(&zero, &m.constraints, &SolverOptions::dual()), Err(MceError::PriorNotPositive));
    }

    #[test]
    fn dual_gradient_matches_finite_differences() {
        let m = cycle_model();
        let dual = DualObjective::new(&uniform(&[A, B]).unwrap(), &m.constraints).unwrap();
        let lambda = [0.7, -1.3];
        let g = dual.gradient(&lambda);
        let h = 1e-5;
        for k in 0..2 {
            let mut up = lambda;
            let mut down = lambda;
            up[k] += h;
            down[k] -= h;
            let fd = (dual.value(&up) - dual.value(&down)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "{fd} vs {}", g[k]);
        }
    }

    #[test]
    fn successive_converges_to_dual() {
        let m = cycle_model();
        let u = uniform(&[A, B]).unwrap();
        let exact = mce_dual_solve(&u, &m.constraints, &SolverOptions::dual()).unwrap();
        let out = successive_solve(&u, &m.constraints, &SolverOptions::successive().with_tolerance(1e-9)).unwrap();
        assert!(out.converged);
        close(out.table.probs(), exact.probs(), 1e-4);
        // the largest residual goes first: P(B|A) at 0.3
        assert_eq!(out.trace.events[0].constraint, 1);
        assert!((out.trace.events[0].residual_before - 0.3).abs() < 1e-12);
    }

    #[test]
    fn round_robin_two_cycles() {
        let m = cycle_model();
        let opts = SolverOptions {
            tolerance: 1e-12,
            max_cycles: 2,
            schedule: Schedule::RoundRobin,
            ..SolverOptions::successive()
        };
        let out = successive_solve(&uniform(&[A, B]).unwrap(), &m.constraints, &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.trace.len(), 4);
        assert_eq!(out.cycles, 2);
        let order: Vec<usize> = out.trace.events.iter().map(|e| e.constraint).collect();
        assert_eq!(order, [0, 1, 0, 1]);
        close(out.table.probs(), &[0.2807, 0.1808, 0.1075, 0.4299], 2e-3);
    }

    #[test]
    fn single_constraint_needs_one_application() {
        let m = parse_model("vars A B C\nP(C|A,~B)=0.35").unwrap();
        let out =
            successive_solve(&uniform(&[A, B, C]).unwrap(), &m.constraints, &SolverOptions::successive()).unwrap();
        assert!(out.converged);
        assert_eq!(out.trace.len(), 1);
        let tsv = out.trace.to_tsv(&m);
        assert_eq!(tsv.lines().nth(1).unwrap(), "1\tP(C|A,~B)=0.35\t1.500000e-1");
    }

    #[test]
    fn options_are_validated() {
        let bad = SolverOptions { tolerance: 0.0, ..SolverOptions::dual() };
        assert!(bad.validate().is_err());
        let bad = SolverOptions { max_cycles: 0, ..SolverOptions::dual() };
        assert!(bad.validate().is_err());
    }
}
