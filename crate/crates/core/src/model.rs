// SPDX-License-Identifier: Apache-2.0

//! Constraint models over binary variables.
//!
//! A model is a list of declared variables plus a [`ConstraintSet`] holding
//! conditional constraints `P(x | E) = mu` and marginal constraints
//! `P(E) = v`. The sum-to-one constraint is implicit and always present.
//!
//! The text format is line oriented:
//!
//! ```text
//! # the two-variable cycle
//! vars A B
//! P(A|B) = 0.7
//! P(B|A) = 0.8
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Position of a variable in its model's declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub id: VarId,
}

/// A variable asserted (`A`) or negated (`~A`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: VarId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: VarId) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: VarId) -> Self {
        Literal { var, positive: false }
    }

    pub fn negate(self) -> Self {
        Literal { var: self.var, positive: !self.positive }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("target variable #{0} appears in its own condition")]
    TargetInCondition(usize),
    #[error("variable #{0} appears more than once in a scope")]
    DuplicateVariable(usize),
    #[error("probability {0} is outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("marginal constraint needs at least one literal")]
    EmptyMarginal,
    #[error("constraint #{0} repeats an earlier constraint on the same cell")]
    Duplicate(usize),
    #[error("constraint references unknown variable #{0}")]
    UnknownVariable(usize),
}

fn check_value(value: f64) -> Result<(), ConstraintError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConstraintError::ValueOutOfRange(value))
    }
}

fn check_distinct(literals: &[Literal]) -> Result<(), ConstraintError> {
    let mut seen = BTreeSet::new();
    for lit in literals {
        if !seen.insert(lit.var) {
            return Err(ConstraintError::DuplicateVariable(lit.var.0));
        }
    }
    Ok(())
}

/// `P(target | condition) = value`, with the target always asserted.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalConstraint {
    pub target: VarId,
    pub condition: Vec<Literal>,
    pub value: f64,
}

impl ConditionalConstraint {
    /// Builds a conditional constraint. A negated target `P(~x | E) = mu` is
    /// stored as `P(x | E) = 1 - mu`.
    pub fn new(target: Literal, condition: Vec<Literal>, value: f64) -> Result<Self, ConstraintError> {
        check_value(value)?;
        check_distinct(&condition)?;
        if condition.iter().any(|l| l.var == target.var) {
            return Err(ConstraintError::TargetInCondition(target.var.0));
        }
        let value = if target.positive { value } else { 1.0 - value };
        Ok(ConditionalConstraint { target: target.var, condition, value })
    }

    /// Target and condition variables, sorted.
    pub fn scope(&self) -> Vec<VarId> {
        let mut s: Vec<VarId> = self.condition.iter().map(|l| l.var).collect();
        s.push(self.target);
        s.sort();
        s
    }
}

/// `P(l_1, ..., l_k) = value`: the probability of one cell of a variable subset.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalConstraint {
    pub literals: Vec<Literal>,
    pub value: f64,
}

impl MarginalConstraint {
    pub fn new(literals: Vec<Literal>, value: f64) -> Result<Self, ConstraintError> {
        check_value(value)?;
        if literals.is_empty() {
            return Err(ConstraintError::EmptyMarginal);
        }
        check_distinct(&literals)?;
        Ok(MarginalConstraint { literals, value })
    }

    pub fn scope(&self) -> Vec<VarId> {
        let mut s: Vec<VarId> = self.literals.iter().map(|l| l.var).collect();
        s.sort();
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Conditional(ConditionalConstraint),
    Marginal(MarginalConstraint),
}

impl Constraint {
    pub fn scope(&self) -> Vec<VarId> {
        match self {
            Constraint::Conditional(c) => c.scope(),
            Constraint::Marginal(m) => m.scope(),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Constraint::Conditional(c) => c.value,
            Constraint::Marginal(m) => m.value,
        }
    }

    fn cell_key(&self) -> (Option<VarId>, Vec<Literal>) {
        match self {
            Constraint::Conditional(c) => {
                let mut lits = c.condition.clone();
                lits.sort();
                (Some(c.target), lits)
            }
            Constraint::Marginal(m) => {
                let mut lits = m.literals.clone();
                lits.sort();
                (None, lits)
            }
        }
    }

    /// Renders the constraint in the model file syntax.
    pub fn display<'a>(&'a self, vars: &'a [Variable]) -> ConstraintDisplay<'a> {
        ConstraintDisplay { constraint: self, vars }
    }
}

impl From<ConditionalConstraint> for Constraint {
    fn from(c: ConditionalConstraint) -> Self {
        Constraint::Conditional(c)
    }
}

impl From<MarginalConstraint> for Constraint {
    fn from(m: MarginalConstraint) -> Self {
        Constraint::Marginal(m)
    }
}

pub struct ConstraintDisplay<'a> {
    constraint: &'a Constraint,
    vars: &'a [Variable],
}

fn write_literal(f: &mut fmt::Formatter<'_>, vars: &[Variable], lit: Literal) -> fmt::Result {
    let name = vars.get(lit.var.0).map(|v| v.name.as_str()).unwrap_or("?");
    if lit.positive {
        write!(f, "{name}")
    } else {
        write!(f, "~{name}")
    }
}

fn write_literals(f: &mut fmt::Formatter<'_>, vars: &[Variable], lits: &[Literal]) -> fmt::Result {
    for (i, lit) in lits.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write_literal(f, vars, *lit)?;
    }
    Ok(())
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("P(")?;
        match self.constraint {
            Constraint::Conditional(c) => {
                write_literal(f, self.vars, Literal::pos(c.target))?;
                if !c.condition.is_empty() {
                    f.write_str("|")?;
                    write_literals(f, self.vars, &c.condition)?;
                }
            }
            Constraint::Marginal(m) => write_literals(f, self.vars, &m.literals)?,
        }
        write!(f, ")={}", self.constraint.value())
    }
}

/// Conditional and marginal constraints in declaration order. The universal
/// constraint (probabilities sum to one) is implied and cannot be removed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a constraint, rejecting a second constraint on the same cell.
    pub fn push(&mut self, c: impl Into<Constraint>) -> Result<usize, ConstraintError> {
        let c = c.into();
        let key = c.cell_key();
        if let Some(i) = self.constraints.iter().position(|o| o.cell_key() == key) {
            return Err(ConstraintError::Duplicate(i));
        }
        self.constraints.push(c);
        Ok(self.constraints.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Constraint> {
        self.constraints.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Constraint> {
        self.constraints.iter()
    }

    pub fn conditionals(&self) -> impl Iterator<Item = &ConditionalConstraint> {
        self.constraints.iter().filter_map(|c| match c {
            Constraint::Conditional(c) => Some(c),
            Constraint::Marginal(_) => None,
        })
    }

    pub fn marginals(&self) -> impl Iterator<Item = &MarginalConstraint> {
        self.constraints.iter().filter_map(|c| match c {
            Constraint::Marginal(m) => Some(m),
            Constraint::Conditional(_) => None,
        })
    }

    /// The constraints whose variables all lie in `scope`, with their indices.
    pub fn within<'a>(&'a self, scope: &'a [VarId]) -> impl Iterator<Item = (usize, &'a Constraint)> + 'a {
        self.constraints.iter().enumerate().filter(move |(_, c)| c.scope().iter().all(|v| scope.contains(v)))
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a Constraint;
    type IntoIter = std::slice::Iter<'a, Constraint>;

    fn into_iter(self) -> Self::IntoIter {
        self.constraints.iter()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub variables: Vec<Variable>,
    pub constraints: ConstraintSet,
}

impl Model {
    /// Builds a model from variable names and a constraint set, checking that
    /// every constraint refers to declared variables.
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        constraints: ConstraintSet,
    ) -> Result<Self, ConstraintError> {
        let variables: Vec<Variable> =
            names.into_iter().enumerate().map(|(i, n)| Variable { name: n.into(), id: VarId(i) }).collect();
        for c in &constraints {
            if let Some(v) = c.scope().into_iter().find(|v| v.0 >= variables.len()) {
                return Err(ConstraintError::UnknownVariable(v.0));
            }
        }
        Ok(Model { variables, constraints })
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    pub fn ids(&self) -> Vec<VarId> {
        self.variables.iter().map(|v| v.id).collect()
    }

    /// Looks up a comma separated list of names.
    pub fn vars(&self, names: &str) -> Option<Vec<VarId>> {
        names.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|n| self.var(n)).collect()
    }

    /// Parses a comma separated literal list such as `A,~B`.
    pub fn literals(&self, text: &str) -> Option<Vec<Literal>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|t| match t.strip_prefix('~') {
                Some(n) => self.var(n.trim()).map(Literal::neg),
                None => self.var(t).map(Literal::pos),
            })
            .collect()
    }

    pub fn constraint_text(&self, i: usize) -> String {
        self.constraints.get(i).map(|c| c.display(&self.variables).to_string()).unwrap_or_default()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("vars")?;
        for v in &self.variables {
            write!(f, " {}", v.name)?;
        }
        writeln!(f)?;
        for c in &self.constraints {
            writeln!(f, "{}", c.display(&self.variables))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: undeclared variable `{name}`")]
    Undeclared { line: usize, column: usize, name: String },
    #[error("line {line}: variable `{name}` declared twice")]
    DuplicateDeclaration { line: usize, name: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Tilde,
    Open,
    Close,
    Comma,
    Bar,
    Equals,
    Number(String),
}

struct Lexer {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
}

impl Lexer {
    fn new(src: &str, line: usize) -> Self {
        Lexer { chars: src.char_indices().collect(), pos: 0, line }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn err(&self, column: usize, message: impl Into<String>) -> ModelError {
        ModelError::Syntax { line: self.line, column, message: message.into() }
    }

    /// Returns the next token and the 1-based column where it starts.
    fn next(&mut self) -> Result<Option<(Tok, usize)>, ModelError> {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
        let Some(&(_, c)) = self.chars.get(self.pos) else {
            return Ok(None);
        };
        let col = self.column();
        let single = match c {
            '~' => Some(Tok::Tilde),
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            ',' => Some(Tok::Comma),
            '|' => Some(Tok::Bar),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok(Some((t, col)));
        }
        if c.is_alphabetic() || c == '_' {
            let start = self.pos;
            while self.pos < self.chars.len()
                && (self.chars[self.pos].1.is_alphanumeric() || self.chars[self.pos].1 == '_')
            {
                self.pos += 1;
            }
            let s: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
            return Ok(Some((Tok::Ident(s), col)));
        }
        if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let start = self.pos;
            while self.pos < self.chars.len() {
                let d = self.chars[self.pos].1;
                let after_exp = self.pos > start && matches!(self.chars[self.pos - 1].1, 'e' | 'E');
                if d.is_ascii_digit()
                    || d == '.'
                    || d == 'e'
                    || d == 'E'
                    || ((d == '-' || d == '+') && (self.pos == start || after_exp))
                {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let s: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
            return Ok(Some((Tok::Number(s), col)));
        }
        Err(self.err(col, format!("unexpected character `{c}`")))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, ModelError> {
        match self.next()? {
            Some((t, col)) if t == want => Ok(col),
            Some((_, col)) => Err(self.err(col, format!("expected {what}"))),
            None => Err(self.err(self.column(), format!("expected {what}, found end of line"))),
        }
    }
}

struct ParsedConstraint {
    left: Vec<Literal>,
    right: Option<Vec<Literal>>,
    value: f64,
}

fn parse_literal_list(
    lex: &mut Lexer,
    names: &BTreeMap<String, VarId>,
    terminators: &[Tok],
) -> Result<(Vec<Literal>, Tok), ModelError> {
    let mut lits = Vec::new();
    loop {
        let mut positive = true;
        let (tok, col) = lex.next()?.ok_or_else(|| lex.err(lex.column(), "expected a literal, found end of line"))?;
        let (tok, col) = if tok == Tok::Tilde {
            positive = false;
            lex.next()?.ok_or_else(|| lex.err(lex.column(), "expected a variable after `~`"))?
        } else {
            (tok, col)
        };
        let Tok::Ident(name) = tok else {
            return Err(lex.err(col, "expected a variable name"));
        };
        let var = *names.get(&name).ok_or(ModelError::Undeclared { line: lex.line, column: col, name })?;
        lits.push(Literal { var, positive });
        match lex.next()? {
            Some((Tok::Comma, _)) => continue,
            Some((t, _)) if terminators.contains(&t) => return Ok((lits, t)),
            Some((_, col)) => return Err(lex.err(col, "expected `,`, `|` or `)`")),
            None => return Err(lex.err(lex.column(), "unterminated `P(`")),
        }
    }
}

fn parse_constraint_line(lex: &mut Lexer, names: &BTreeMap<String, VarId>) -> Result<ParsedConstraint, ModelError> {
    lex.expect(Tok::Open, "`(` after `P`")?;
    let (left, term) = parse_literal_list(lex, names, &[Tok::Bar, Tok::Close])?;
    let right = if term == Tok::Bar {
        let (r, _) = parse_literal_list(lex, names, &[Tok::Close])?;
        Some(r)
    } else {
        None
    };
    lex.expect(Tok::Equals, "`=`")?;
    let value = match lex.next()? {
        Some((Tok::Number(s), col)) => s.parse::<f64>().map_err(|_| lex.err(col, format!("invalid number `{s}`")))?,
        Some((_, col)) => return Err(lex.err(col, "expected a probability")),
        None => return Err(lex.err(lex.column(), "expected a probability, found end of line")),
    };
    if let Some((_, col)) = lex.next()? {
        return Err(lex.err(col, "trailing input after constraint"));
    }
    Ok(ParsedConstraint { left, right, value })
}

fn describe(err: ConstraintError, names: &[Variable]) -> String {
    let name = |i: usize| names.get(i).map(|v| v.name.clone()).unwrap_or_else(|| format!("#{i}"));
    match err {
        ConstraintError::TargetInCondition(v) => format!("target `{}` appears in its own condition", name(v)),
        ConstraintError::DuplicateVariable(v) => format!("variable `{}` appears twice in one constraint", name(v)),
        ConstraintError::Duplicate(i) => format!("duplicates constraint #{} on the same cell", i + 1),
        other => other.to_string(),
    }
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut variables: Vec<Variable> = Vec::new();
    let mut names: BTreeMap<String, VarId> = BTreeMap::new();
    let mut declared = false;
    let mut constraints = ConstraintSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut lex = Lexer::new(body, line);
        let Some((first, col)) = lex.next()? else {
            continue;
        };
        match first {
            Tok::Ident(ref kw) if kw == "vars" => {
                if declared {
                    return Err(lex.err(col, "only one `vars` line is allowed"));
                }
                declared = true;
                while let Some((tok, col)) = lex.next()? {
                    let Tok::Ident(name) = tok else {
                        return Err(lex.err(col, "expected a variable name (variables are binary; no domains allowed)"));
                    };
                    if names.contains_key(&name) {
                        return Err(ModelError::DuplicateDeclaration { line, name });
                    }
                    let id = VarId(variables.len());
                    names.insert(name.clone(), id);
                    variables.push(Variable { name, id });
                }
                if variables.is_empty() {
                    return Err(lex.err(lex.column(), "`vars` needs at least one variable"));
                }
            }
            Tok::Ident(ref kw) if kw == "P" => {
                if !declared {
                    return Err(lex.err(col, "constraints must follow the `vars` line"));
                }
                let parsed = parse_constraint_line(&mut lex, &names)?;
                let invalid = |e| ModelError::Invalid { line, message: describe(e, &variables) };
                let constraint: Constraint = match parsed.right {
                    Some(cond) => {
                        if parsed.left.len() != 1 {
                            return Err(ModelError::Invalid {
                                line,
                                message: "a conditional constraint takes exactly one target literal".into(),
                            });
                        }
                        ConditionalConstraint::new(parsed.left[0], cond, parsed.value).map_err(invalid)?.into()
                    }
                    None => MarginalConstraint::new(parsed.left, parsed.value).map_err(invalid)?.into(),
                };
                constraints.push(constraint).map_err(invalid)?;
            }
            _ => return Err(lex.err(col, "expected `vars` or `P(`")),
        }
    }
    if !declared {
        return Err(ModelError::Syntax { line: 1, column: 1, message: "missing `vars` line".into() });
    }
    Ok(Model { variables, constraints })
}

/// Directed graph with an arc from every condition variable of a conditional
/// constraint to its target. Directed cycles are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNetwork {
    pub nodes: Vec<Variable>,
    pub edges: BTreeSet<(VarId, VarId)>,
}

impl BeliefNetwork {
    pub fn children(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.edges.iter().filter(move |(a, _)| *a == v).map(|&(_, b)| b)
    }

    pub fn parents(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.edges.iter().filter(move |(_, b)| *b == v).map(|&(a, _)| a)
    }

    pub fn has_arc(&self, from: VarId, to: VarId) -> bool {
        self.edges.contains(&(from, to))
    }
}

/// Undirected neighbor system. Edges are stored as `(low, high)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    pub nodes: Vec<Variable>,
    pub edges: BTreeSet<(VarId, VarId)>,
}

impl NeighborGraph {
    /// Builds a graph over `nodes` from an arbitrary edge list; self loops are dropped.
    pub fn from_edges(nodes: Vec<Variable>, edges: impl IntoIterator<Item = (VarId, VarId)>) -> Self {
        let edges =
            edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        NeighborGraph { nodes, edges }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn adjacent(&self, a: VarId, b: VarId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&key)
    }

    pub fn neighbors(&self, v: VarId) -> BTreeSet<VarId> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Dense adjacency matrix indexed by node position.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in &self.edges {
            adj[a.0][b.0] = true;
            adj[b.0][a.0] = true;
        }
        adj
    }
}

pub fn build_network(model: &Model) -> BeliefNetwork {
    let mut edges = BTreeSet::new();
    for c in model.constraints.conditionals() {
        for lit in &c.condition {
            edges.insert((lit.var, c.target));
        }
    }
    BeliefNetwork { nodes: model.variables.clone(), edges }
}

pub fn neighbor_graph(model: &Model) -> NeighborGraph {
    let mut edges = Vec::new();
    for c in model.constraints.conditionals() {
        let scope = c.scope();
        for (i, &a) in scope.iter().enumerate() {
            for &b in &scope[i + 1..] {
                edges.push((a, b));
            }
        }
    }
    NeighborGraph::from_edges(model.variables.clone(), edges)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScopeWarning {
    pub constraint: usize,
    pub message: String,
}

/// Flags marginal constraints whose variables do not all fall inside the
/// scope of one conditional constraint. Such marginals are still used.
pub fn validate_scope_rule(model: &Model) -> Vec<ScopeWarning> {
    let scopes: Vec<Vec<VarId>> = model.constraints.conditionals().map(|c| c.scope()).collect();
    model
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            Constraint::Marginal(m) => {
                let vars = m.scope();
                let covered = scopes.iter().any(|s| vars.iter().all(|v| s.contains(v)));
                (!covered).then(|| ScopeWarning {
                    constraint: i,
                    message: format!(
                        "{} is not contained in the scope of any conditional constraint",
                        c.display(&model.variables)
                    ),
                })
            }
            Constraint::Conditional(_) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINING: &str = "vars A B C D
P(A)=0.2
P(B)=0.7
P(C|A,D)=0.6
P(C|~A,D)=0.2
P(C|A,~D)=0.2
P(C|~A,~D)=0.1
P(D|B,C)=0.8
P(D|~B,C)=0.3
P(D|B,~C)=0.4
P(D|~B,~C)=0.2
";

    fn edge_names(model: &Model, edges: &BTreeSet<(VarId, VarId)>) -> Vec<String> {
        edges.iter().map(|&(a, b)| format!("{}{}", model.name(a), model.name(b))).collect()
    }

    #[test]
    fn parses_two_cycle() {
        let m = parse_model("vars A B\nP(A|B)=0.7\nP(B|A)=0.8").unwrap();
        assert_eq!(m.variables.len(), 2);
        assert_eq!(m.constraints.conditionals().count(), 2);
        assert_eq!(m.constraints.marginals().count(), 0);
    }

    #[test]
    fn vars_only_is_valid() {
        let m = parse_model("vars A").unwrap();
        assert!(m.constraints.is_empty());
    }

    #[test]
    fn whitespace_and_comments() {
        let m = parse_model("# header\nvars A B  # two\n\n P ( ~A , B ) = 0.25 # cell\n").unwrap();
        let Constraint::Marginal(mc) = m.constraints.get(0).unwrap() else { panic!() };
        assert_eq!(mc.literals, vec![Literal::neg(VarId(0)), Literal::pos(VarId(1))]);
        assert_eq!(mc.value, 0.25);
    }

    #[test]
    fn rejects_target_in_condition() {
        let err = parse_model("vars A\nP(A|A)=0.5").unwrap_err();
        assert!(matches!(err, ModelError::Invalid { line: 2, .. }), "{err}");
    }

    #[test]
    fn reports_line_and_column() {
        match parse_model("vars A B\nP(A|B)=0.7\nP(A B)=0.1").unwrap_err() {
            ModelError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 5)),
            other => panic!("{other}"),
        }
        match parse_model("vars A\nP(A|Z)=0.5").unwrap_err() {
            ModelError::Undeclared { line, column, name } => {
                assert_eq!((line, column, name.as_str()), (2, 5, "Z"))
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn rejects_bad_values_and_scopes() {
        assert!(parse_model("vars A\nP(A)=1.5").is_err());
        assert!(parse_model("vars A\nP(A)=-0.1").is_err());
        assert!(parse_model("vars A B\nP(A|B,~B)=0.3").is_err());
        assert!(parse_model("vars A B\nP(A,B|B)=0.3").is_err());
        assert!(parse_model("vars A A").is_err());
        assert!(parse_model("vars A:3").is_err());
        assert!(parse_model("P(A)=0.5").is_err());
    }

    #[test]
    fn negative_target_is_normalized() {
        let m = parse_model("vars A B\nP(~A|B)=0.25").unwrap();
        let c = m.constraints.conditionals().next().unwrap();
        assert_eq!(c.target, VarId(0));
        assert_eq!(c.value, 0.75);
    }

    #[test]
    fn duplicate_cells_are_errors() {
        assert!(parse_model("vars A B\nP(A|B)=0.7\nP(A|B)=0.7").is_err());
        assert!(parse_model("vars A B\nP(A|B)=0.7\nP(~A|B)=0.3").is_err());
        assert!(parse_model("vars A B\nP(A,B)=0.2\nP(B,A)=0.3").is_err());
        // different cells of the same variables are fine
        assert!(parse_model("vars A B\nP(A|B)=0.7\nP(A|~B)=0.3").is_ok());
    }

    #[test]
    fn mining_network_keeps_the_cycle() {
        let m = parse_model(MINING).unwrap();
        let net = build_network(&m);
        assert_eq!(edge_names(&m, &net.edges), ["AC", "BD", "CD", "DC"]);
        assert!(net.has_arc(m.var("C").unwrap(), m.var("D").unwrap()));
        assert!(net.has_arc(m.var("D").unwrap(), m.var("C").unwrap()));
    }

    #[test]
    fn two_cycle_network() {
        let m = parse_model("vars A B\nP(A|B)=0.7\nP(B|A)=0.8").unwrap();
        assert_eq!(edge_names(&m, &build_network(&m).edges), ["AB", "BA"]);
        assert_eq!(edge_names(&m, &neighbor_graph(&m).edges), ["AB"]);
    }

    #[test]
    fn marginals_only_give_no_edges() {
        let m = parse_model("vars A B\nP(A)=0.3\nP(A,B)=0.1").unwrap();
        assert!(build_network(&m).edges.is_empty());
        assert!(neighbor_graph(&m).edges.is_empty());
    }

    #[test]
    fn mining_neighbor_graph() {
        let m = parse_model(MINING).unwrap();
        let g = neighbor_graph(&m);
        assert_eq!(edge_names(&m, &g.edges), ["AC", "AD", "BC", "BD", "CD"]);
        let names = |s: BTreeSet<VarId>| s.into_iter().map(|v| m.name(v).to_string()).collect::<String>();
        assert_eq!(names(g.neighbors(VarId(0))), "CD");
        assert_eq!(names(g.neighbors(VarId(2))), "ABD");
    }

    #[test]
    fn scope_rule_warnings() {
        assert!(validate_scope_rule(&parse_model(MINING).unwrap()).is_empty());
        assert!(validate_scope_rule(&parse_model("vars A B\nP(A|B)=0.7\nP(A,B)=0.5").unwrap()).is_empty());
        let w = validate_scope_rule(&parse_model("vars A B C\nP(A|B)=0.7\nP(C)=0.5").unwrap());
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].constraint, 1);
        assert!(w[0].message.starts_with("P(C)=0.5"));
    }

    #[test]
    fn serialization_round_trips() {
        let m = parse_model(MINING).unwrap();
        assert_eq!(parse_model(&m.to_string()).unwrap(), m);
    }
}
