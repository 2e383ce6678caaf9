// SPDX-License-Identifier: Apache-2.0

//! Graph algorithms for decomposing a network into an acyclic hypergraph of
//! cliques, and generalized d-separation for directed graphs with cycles.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{neighbor_graph, BeliefNetwork, Model, NeighborGraph, VarId, Variable};

pub type VarSet = BTreeSet<VarId>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid d-separation query: {0}")]
    InvalidQuery(String),
    #[error("invalid annealing options: {0}")]
    InvalidOptions(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: Vec<VarId>,
    pub edges: Vec<VarSet>,
}

impl Hypergraph {
    /// Builds a hypergraph whose vertex set is the union of `edges`.
    pub fn new(edges: Vec<VarSet>) -> Self {
        let vertices: VarSet = edges.iter().flatten().copied().collect();
        Hypergraph { vertices: vertices.into_iter().collect(), edges }
    }
}

/// Sum over cliques of the state-space size `2^|C|`.
pub fn clique_cost<'a>(cliques: impl IntoIterator<Item = &'a VarSet>) -> u64 {
    cliques.into_iter().map(|c| 1u64 << c.len()).sum()
}

fn bron_kerbosch(adj: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| (p.iter().filter(|&&v| adj[u][v]).count(), std::cmp::Reverse(u)))
        .expect("p is nonempty");
    let mut p = p;
    let mut x = x;
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
    for v in candidates {
        r.push(v);
        let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r, np, nx, out);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}

fn cliques_of(adj: &[Vec<bool>]) -> Vec<VarSet> {
    let mut raw = Vec::new();
    bron_kerbosch(adj, &mut Vec::new(), (0..adj.len()).collect(), Vec::new(), &mut raw);
    let mut cliques: Vec<VarSet> = raw.into_iter().map(|c| c.into_iter().map(VarId).collect()).collect();
    cliques.sort();
    cliques
}

/// Inclusion-maximal cliques, each as a sorted set, listed in lexicographic order.
pub fn maximal_cliques(g: &NeighborGraph) -> Vec<VarSet> {
    cliques_of(&g.adjacency())
}

/// Graham reduction: repeatedly drop vertices that occur in a single
/// hyperedge and hyperedges contained in another. The hypergraph is acyclic
/// iff this empties it.
pub fn graham_acyclic(h: &Hypergraph) -> bool {
    let mut edges: Vec<VarSet> = h.edges.clone();
    loop {
        let mut changed = false;
        let mut count: HashMap<VarId, usize> = HashMap::new();
        for e in &edges {
            for v in e {
                *count.entry(*v).or_default() += 1;
            }
        }
        for e in &mut edges {
            let before = e.len();
            e.retain(|v| count[v] > 1);
            changed |= e.len() != before;
        }
        let mut i = 0;
        while i < edges.len() {
            let contained = (0..edges.len()).any(|j| j != i && edges[i].is_subset(&edges[j]));
            if contained {
                edges.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    edges.iter().all(BTreeSet::is_empty)
}

/// An ordering of hyperedges with the running intersection property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RipOrder {
    /// Hyperedge indices in order.
    pub order: Vec<usize>,
    /// For each position `i > 0`, the position of an earlier hyperedge that
    /// contains the overlap of `order[i]` with everything before it.
    pub anchors: Vec<Option<usize>>,
}

fn rip_anchor(edges: &[VarSet], placed: &[usize], next: usize) -> Option<usize> {
    let union: VarSet = placed.iter().flat_map(|&i| edges[i].iter().copied()).collect();
    let overlap: VarSet = edges[next].intersection(&union).copied().collect();
    placed.iter().position(|&j| overlap.is_subset(&edges[j]))
}

fn rip_search(
    edges: &[VarSet],
    placed: &mut Vec<usize>,
    anchors: &mut Vec<Option<usize>>,
    failed: &mut HashSet<Vec<bool>>,
) -> bool {
    if placed.len() == edges.len() {
        return true;
    }
    let mut key = vec![false; edges.len()];
    for &i in placed.iter() {
        key[i] = true;
    }
    if failed.contains(&key) {
        return false;
    }
    for next in 0..edges.len() {
        if key[next] {
            continue;
        }
        let anchor = if placed.is_empty() { Some(None) } else { rip_anchor(edges, placed, next).map(Some) };
        if let Some(a) = anchor {
            placed.push(next);
            anchors.push(a);
            if rip_search(edges, placed, anchors, failed) {
                return true;
            }
            placed.pop();
            anchors.pop();
        }
    }
    failed.insert(key);
    false
}

/// Finds a running-intersection ordering by backtracking search, or `None`.
pub fn rip_order(h: &Hypergraph) -> Option<RipOrder> {
    let mut placed = Vec::new();
    let mut anchors = Vec::new();
    rip_search(&h.edges, &mut placed, &mut anchors, &mut HashSet::new()).then_some(RipOrder { order: placed, anchors })
}

/// A fill-in and the clique cover it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub nodes: Vec<Variable>,
    /// Edges added to the neighbor graph, as `(low, high)` pairs.
    pub fill_in: BTreeSet<(VarId, VarId)>,
    /// Maximal cliques of the filled graph, in running-intersection order.
    pub cliques: Vec<VarSet>,
    /// `anchors[i]` is the earlier clique holding clique `i`'s overlap with its predecessors.
    pub anchors: Vec<Option<usize>>,
    pub cost: u64,
}

impl Decomposition {
    pub fn hypergraph(&self) -> Hypergraph {
        Hypergraph::new(self.cliques.clone())
    }

    /// Separator of clique `i` with its predecessors.
    pub fn separator(&self, i: usize) -> VarSet {
        let before: VarSet = self.cliques[..i].iter().flatten().copied().collect();
        self.cliques[i].intersection(&before).copied().collect()
    }

    /// Human readable report: fill edges, cliques, running-intersection order and cost.
    pub fn to_text(&self) -> String {
        let name = |v: &VarId| self.nodes.get(v.0).map(|n| n.name.clone()).unwrap_or_else(|| format!("#{}", v.0));
        let set = |s: &VarSet| format!("{{{}}}", s.iter().map(name).collect::<Vec<_>>().join(","));
        let mut out = String::new();
        let fills: Vec<String> = self.fill_in.iter().map(|(a, b)| format!("{}-{}", name(a), name(b))).collect();
        let _ = writeln!(out, "fill-in: {}", if fills.is_empty() { "(none)".to_string() } else { fills.join(" ") });
        let _ = writeln!(out, "cliques: {}", self.cliques.iter().map(set).collect::<Vec<_>>().join(" "));
        out.push_str("order:\n");
        for (i, c) in self.cliques.iter().enumerate() {
            match self.anchors[i] {
                None => {
                    let _ = writeln!(out, "  S{i} = {}", set(c));
                }
                Some(j) => {
                    let _ = writeln!(out, "  S{i} = {}  anchor S{j}  separator {}", set(c), set(&self.separator(i)));
                }
            }
        }
        let _ = writeln!(out, "cost: {}", self.cost);
        out
    }
}

fn filled_adjacency(g: &NeighborGraph, fill: &BTreeSet<(VarId, VarId)>) -> Vec<Vec<bool>> {
    let mut adj = g.adjacency();
    for &(a, b) in fill {
        adj[a.0][b.0] = true;
        adj[b.0][a.0] = true;
    }
    adj
}

/// Builds the decomposition for `g` plus `fill`, which must make `g` chordal.
fn assemble(g: &NeighborGraph, fill: BTreeSet<(VarId, VarId)>) -> Decomposition {
    let adj = filled_adjacency(g, &fill);
    let cliques = cliques_of(&adj);
    let h = Hypergraph::new(cliques.clone());
    let rip = rip_order(&h).expect("cliques of a chordal graph have a running-intersection order");
    let ordered: Vec<VarSet> = rip.order.iter().map(|&i| cliques[i].clone()).collect();
    let cost = clique_cost(&ordered);
    Decomposition { nodes: g.nodes.clone(), fill_in: fill, cliques: ordered, anchors: rip.anchors, cost }
}

/// Chordality via maximum cardinality search and a perfect-elimination check.
pub fn is_chordal(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v =
            (0..n).filter(|&v| !numbered[v]).max_by_key(|&v| (weight[v], std::cmp::Reverse(v))).expect("vertex left");
        numbered[v] = true;
        order.push(v);
        for u in 0..n {
            if adj[v][u] && !numbered[u] {
                weight[u] += 1;
            }
        }
    }
    // reverse search order is a perfect elimination order iff the graph is chordal
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    for &v in &order {
        let earlier: Vec<usize> = (0..n).filter(|&u| adj[v][u] && pos[u] < pos[v]).collect();
        if let Some(&parent) = earlier.iter().max_by_key(|&&u| pos[u]) {
            if earlier.iter().any(|&u| u != parent && !adj[parent][u]) {
                return false;
            }
        }
    }
    true
}

/// Finds a chordless cycle of length at least four, if any.
pub fn chordless_cycle(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    for v in 0..n {
        let nbrs: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if adj[a][b] {
                    continue;
                }
                // shortest a-b path avoiding v and its other neighbors
                let blocked: Vec<bool> = (0..n).map(|u| u == v || (adj[v][u] && u != a && u != b)).collect();
                let mut prev = vec![usize::MAX; n];
                let mut seen = vec![false; n];
                let mut queue = VecDeque::from([a]);
                seen[a] = true;
                while let Some(u) = queue.pop_front() {
                    if u == b {
                        break;
                    }
                    for w in 0..n {
                        if adj[u][w] && !seen[w] && !blocked[w] {
                            seen[w] = true;
                            prev[w] = u;
                            queue.push_back(w);
                        }
                    }
                }
                if seen[b] {
                    let mut cycle = vec![v];
                    let mut path = vec![b];
                    let mut u = b;
                    while u != a {
                        u = prev[u];
                        path.push(u);
                    }
                    path.reverse();
                    cycle.extend(path);
                    return Some(cycle);
                }
            }
        }
    }
    None
}

fn normalized_edge(a: usize, b: usize) -> (VarId, VarId) {
    if a < b {
        (VarId(a), VarId(b))
    } else {
        (VarId(b), VarId(a))
    }
}

/// Minimum-fill elimination: repeatedly eliminate the vertex whose
/// neighborhood needs the fewest new edges (then lowest degree, then lowest
/// index), adding those edges.
pub fn fill_in_greedy(g: &NeighborGraph) -> Decomposition {
    let n = g.len();
    let mut work = g.adjacency();
    let mut gone = vec![false; n];
    let mut fill = BTreeSet::new();
    for _ in 0..n {
        let live_nbrs = |work: &Vec<Vec<bool>>, gone: &Vec<bool>, v: usize| -> Vec<usize> {
            (0..n).filter(|&u| !gone[u] && work[v][u]).collect()
        };
        let missing = |work: &Vec<Vec<bool>>, nb: &[usize]| -> Vec<(usize, usize)> {
            let mut m = Vec::new();
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if !work[a][b] {
                        m.push((a, b));
                    }
                }
            }
            m
        };
        let v = (0..n)
            .filter(|&v| !gone[v])
            .min_by_key(|&v| {
                let nb = live_nbrs(&work, &gone, v);
                (missing(&work, &nb).len(), nb.len(), v)
            })
            .expect("vertex left");
        let nb = live_nbrs(&work, &gone, v);
        for (a, b) in missing(&work, &nb) {
            work[a][b] = true;
            work[b][a] = true;
            fill.insert(normalized_edge(a, b));
        }
        gone[v] = true;
    }
    assemble(g, fill)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealOptions {
    pub seed: u64,
    /// Starting temperature; `None` uses the cost spread of 20 random probes.
    pub initial_temperature: Option<f64>,
    /// Geometric cooling factor applied after each temperature level.
    pub cooling: f64,
    pub moves_per_temperature: usize,
    pub restarts: usize,
    /// Search stops once the temperature falls below this fraction of the start.
    pub min_temperature_ratio: f64,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions {
            seed: 0,
            initial_temperature: None,
            cooling: 0.95,
            moves_per_temperature: 50,
            restarts: 3,
            min_temperature_ratio: 1e-3,
        }
    }
}

impl AnnealOptions {
    pub fn with_seed(seed: u64) -> Self {
        AnnealOptions { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0) {
                return Err(GraphError::InvalidOptions(format!("initial temperature {t} must be positive")));
            }
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(GraphError::InvalidOptions(format!("cooling factor {} must lie in (0, 1)", self.cooling)));
        }
        if !(self.min_temperature_ratio > 0.0 && self.min_temperature_ratio < 1.0) {
            return Err(GraphError::InvalidOptions("minimum temperature ratio must lie in (0, 1)".into()));
        }
        if self.moves_per_temperature == 0 || self.restarts == 0 {
            return Err(GraphError::InvalidOptions("moves and restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Energy of a fill-edge subset: chordless cycles are completed into cliques
/// until the graph is chordal, and the resulting clique cost is returned
/// together with the completed fill set.
struct FillEnergy<'a> {
    base: Vec<Vec<bool>>,
    candidates: &'a [(usize, usize)],
    cache: HashMap<Vec<bool>, (u64, BTreeSet<(VarId, VarId)>)>,
}

impl FillEnergy<'_> {
    fn eval(&mut self, state: &[bool]) -> (u64, BTreeSet<(VarId, VarId)>) {
        if let Some(hit) = self.cache.get(state) {
            return hit.clone();
        }
        let mut adj = self.base.clone();
        let mut fill = BTreeSet::new();
        for (&(a, b), &on) in self.candidates.iter().zip(state) {
            if on {
                adj[a][b] = true;
                adj[b][a] = true;
                fill.insert(normalized_edge(a, b));
            }
        }
        while let Some(cycle) = chordless_cycle(&adj) {
            for (i, &a) in cycle.iter().enumerate() {
                for &b in &cycle[i + 1..] {
                    if !adj[a][b] {
                        adj[a][b] = true;
                        adj[b][a] = true;
                        fill.insert(normalized_edge(a, b));
                    }
                }
            }
        }
        let out = (clique_cost(&cliques_of(&adj)), fill);
        self.cache.insert(state.to_vec(), out.clone());
        out
    }
}

type Ranked = (u64, usize, BTreeSet<(VarId, VarId)>);

fn better(candidate: &Ranked, best: &Ranked) -> bool {
    (candidate.0, candidate.1, &candidate.2) < (best.0, best.1, &best.2)
}

/// Simulated annealing over fill-edge subsets minimizing the clique cost,
/// started from the greedy fill. Deterministic for a given seed.
pub fn fill_in_anneal(g: &NeighborGraph, opts: &AnnealOptions) -> Result<Decomposition, GraphError> {
    opts.validate()?;
    let greedy = fill_in_greedy(g);
    let n = g.len();
    let base = g.adjacency();
    let candidates: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| !base[a][b]).collect();
    if candidates.is_empty() {
        return Ok(greedy);
    }
    let start: Vec<bool> = candidates.iter().map(|&(a, b)| greedy.fill_in.contains(&normalized_edge(a, b))).collect();
    let mut energy = FillEnergy { base, candidates: &candidates, cache: HashMap::new() };
    let mut best: Ranked = (greedy.cost, greedy.fill_in.len(), greedy.fill_in.clone());
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);

    for _ in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let mut state = start.clone();
        let (mut current, _) = energy.eval(&state);
        let t0 = match opts.initial_temperature {
            Some(t) => t,
            None => {
                let mut lo = current;
                let mut hi = current;
                for _ in 0..20 {
                    let mut probe = state.clone();
                    let k = rng.random_range(0..candidates.len());
                    probe[k] = !probe[k];
                    let (e, _) = energy.eval(&probe);
                    lo = lo.min(e);
                    hi = hi.max(e);
                }
                if hi > lo {
                    (hi - lo) as f64
                } else {
                    1.0
                }
            }
        };
        let mut t = t0;
        while t >= t0 * opts.min_temperature_ratio {
            for _ in 0..opts.moves_per_temperature {
                let k = rng.random_range(0..candidates.len());
                state[k] = !state[k];
                let (e, fill) = energy.eval(&state);
                let ranked = (e, fill.len(), fill);
                if better(&ranked, &best) {
                    best = ranked;
                }
                let delta = e as f64 - current as f64;
                if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                    current = e;
                } else {
                    state[k] = !state[k];
                }
            }
            t *= opts.cooling;
        }
    }
    Ok(assemble(g, best.2))
}

/// How [`decompose`] chooses its fill-in.
#[derive(Clone, Debug, PartialEq)]
pub enum FillMethod {
    Greedy,
    Anneal(AnnealOptions),
}

/// Neighbor graph of `model` with each marginal constraint's variables also
/// joined, so every constraint scope ends up inside some clique.
pub fn decomposition_graph(model: &Model) -> NeighborGraph {
    let g = neighbor_graph(model);
    let mut edges: Vec<(VarId, VarId)> = g.edges.iter().copied().collect();
    for m in model.constraints.marginals() {
        let s = m.scope();
        for (i, &a) in s.iter().enumerate() {
            for &b in &s[i + 1..] {
                edges.push((a, b));
            }
        }
    }
    NeighborGraph::from_edges(g.nodes, edges)
}

/// Neighbor graph, fill-in, cliques and running-intersection order for a model.
pub fn decompose(model: &Model, method: &FillMethod) -> Result<Decomposition, GraphError> {
    let g = decomposition_graph(model);
    match method {
        FillMethod::Greedy => Ok(fill_in_greedy(&g)),
        FillMethod::Anneal(opts) => fill_in_anneal(&g, opts),
    }
}

/// Variables reachable from `x` along directed paths of length at least one.
pub fn descendants(net: &BeliefNetwork, x: VarId) -> VarSet {
    let mut seen = VarSet::new();
    let mut stack: Vec<VarId> = net.children(x).collect();
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend(net.children(v));
        }
    }
    seen
}

struct PathSearch<'a> {
    net: &'a BeliefNetwork,
    target: VarId,
    given: &'a VarSet,
    colliders_block: bool,
    collider_open: Vec<bool>,
}

impl PathSearch<'_> {
    /// Whether a path arriving at `z` (through a link pointing into `z` when
    /// `into_z`) can continue unblocked along a link that points into `z`
    /// when `next_into_z`.
    fn passes(&self, z: VarId, into_z: bool, next_into_z: bool) -> bool {
        if into_z && next_into_z {
            !self.colliders_block || self.collider_open[z.0]
        } else {
            !self.given.contains(&z)
        }
    }

    /// Depth-first search over simple paths; true if an open path reaches the target.
    fn open_path(&self, z: VarId, into_z: Option<bool>, visited: &mut Vec<bool>) -> bool {
        let links =
            self.net.children(z).map(|w| (w, false)).chain(self.net.parents(z).map(|w| (w, true))).collect::<Vec<_>>();
        for (w, next_into_z) in links {
            if visited[w.0] {
                continue;
            }
            if let Some(into) = into_z {
                if !self.passes(z, into, next_into_z) {
                    continue;
                }
            }
            if w == self.target {
                return true;
            }
            visited[w.0] = true;
            // the link points into w exactly when it leaves z
            let found = self.open_path(w, Some(!next_into_z), visited);
            visited[w.0] = false;
            if found {
                return true;
            }
        }
        false
    }
}

/// d-separation with a choice of whether unobserved colliders block paths.
/// With `colliders_block = false` only observed non-colliders block.
pub fn d_separated_with(
    net: &BeliefNetwork,
    x: VarId,
    y: VarId,
    given: &VarSet,
    colliders_block: bool,
) -> Result<bool, GraphError> {
    let n = net.nodes.len();
    if x == y {
        return Err(GraphError::InvalidQuery("the two variables must differ".into()));
    }
    if given.contains(&x) || given.contains(&y) {
        return Err(GraphError::InvalidQuery("queried variables cannot be in the separating set".into()));
    }
    if [x, y].iter().chain(given).any(|v| v.0 >= n) {
        return Err(GraphError::InvalidQuery("unknown variable".into()));
    }
    let collider_open = (0..n)
        .map(|z| {
            let z = VarId(z);
            given.contains(&z) || descendants(net, z).iter().any(|d| given.contains(d))
        })
        .collect();
    let search = PathSearch { net, target: y, given, colliders_block, collider_open };
    let mut visited = vec![false; n];
    visited[x.0] = true;
    Ok(!search.open_path(x, None, &mut visited))
}

/// True iff every simple path between `x` and `y` has a blocked pair of
/// consecutive links: a head-to-tail or tail-to-tail meeting at an observed
/// node, or a head-to-head meeting at a node with neither itself nor any
/// descendant observed. Directed cycles are allowed.
pub fn d_separated(net: &BeliefNetwork, x: VarId, y: VarId, given: &VarSet) -> Result<bool, GraphError> {
    d_separated_with(net, x, y, given, true)
}

/// Parsed graph file: `nodes`, `edge` (undirected), `arc` (directed) and
/// `hedge` (hyperedge) lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphSpec {
    pub nodes: Vec<Variable>,
    pub edges: Vec<(VarId, VarId)>,
    pub arcs: Vec<(VarId, VarId)>,
    pub hedges: Vec<VarSet>,
}

impl GraphSpec {
    pub fn neighbor_graph(&self) -> NeighborGraph {
        NeighborGraph::from_edges(self.nodes.clone(), self.edges.iter().copied())
    }

    pub fn network(&self) -> BeliefNetwork {
        BeliefNetwork { nodes: self.nodes.clone(), edges: self.arcs.iter().copied().collect() }
    }

    pub fn hypergraph(&self) -> Hypergraph {
        Hypergraph::new(self.hedges.clone())
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.nodes.iter().find(|v| v.name == name).map(|v| v.id)
    }
}

pub fn parse_graph(text: &str) -> Result<GraphSpec, GraphError> {
    let mut spec = GraphSpec::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut words = raw.split('#').next().unwrap_or("").split_whitespace();
        let Some(kw) = words.next() else { continue };
        let args: Vec<&str> = words.collect();
        let err = |message: String| GraphError::Syntax { line, message };
        if kw == "nodes" {
            for name in args {
                if spec.var(name).is_some() {
                    return Err(err(format!("node `{name}` declared twice")));
                }
                let id = VarId(spec.nodes.len());
                spec.nodes.push(Variable { name: name.to_string(), id });
            }
            continue;
        }
        let ids = args
            .iter()
            .map(|a| spec.var(a).ok_or_else(|| err(format!("unknown node `{a}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        match kw {
            "edge" | "arc" if ids.len() != 2 => return Err(err(format!("`{kw}` takes two nodes"))),
            "edge" => spec.edges.push((ids[0], ids[1])),
            "arc" => spec.arcs.push((ids[0], ids[1])),
            "hedge" if ids.is_empty() => return Err(err("`hedge` needs at least one node".into())),
            "hedge" => spec.hedges.push(ids.into_iter().collect()),
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }
    Ok(spec)
}
