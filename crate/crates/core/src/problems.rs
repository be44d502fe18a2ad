//! Random problem graphs and the three formulations.
//!
//! Logical variable `v` is vertex `v`. In spin form a vertex is "selected"
//! (in the clique, on the `+1` side of the cut or partition) when `s_v = +1`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::{edge, qubo_to_ising, CompiledModel, IsingModel, QuboModel, Var};
use crate::rng;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemGraph {
    pub n: u32,
    pub edges: Vec<(Var, Var)>,
    pub density: f64,
}

impl ProblemGraph {
    /// Builds a graph from an edge list; edges are normalized, sorted and
    /// deduplicated.
    pub fn new(n: u32, edges: impl IntoIterator<Item = (Var, Var)>, density: f64) -> Result<Self> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidInput(alloc::format!("self-loop on vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidInput(alloc::format!("edge ({u}, {v}) outside 0..{n}")));
            }
            list.push(edge(u, v));
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self { n, edges: list, density })
    }

    pub fn complete(n: u32) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges, 1.0).expect("valid edges")
    }

    pub fn cycle(n: u32) -> Self {
        let edges = (0..n).map(|u| (u, (u + 1) % n));
        Self::new(n, edges, 0.0).expect("valid edges")
    }

    pub fn empty(n: u32) -> Self {
        Self::new(n, [], 0.0).expect("no edges")
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: Var, v: Var) -> bool {
        self.edges.binary_search(&edge(u, v)).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.n as usize];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Neighbor bitsets; only valid for `n <= 64`.
    pub fn adjacency_bits(&self) -> Vec<u64> {
        debug_assert!(self.n <= 64);
        let mut adj = alloc::vec![0u64; self.n as usize];
        for &(u, v) in &self.edges {
            adj[u as usize] |= 1 << v;
            adj[v as usize] |= 1 << u;
        }
        adj
    }
}

/// Erdős–Rényi `G(n, p)`: every pair is drawn independently.
pub fn gen_random_graph(n: u32, density: f64, seed: u64) -> Result<ProblemGraph> {
    if n == 0 {
        return Err(Error::InvalidInput("graph needs at least one vertex".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidInput(alloc::format!("density {density} not in [0, 1]")));
    }
    let mut rng = rng::rng_from(seed, &[rng::tag("graph")]);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    Ok(ProblemGraph { n, edges, density })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProblemKind {
    MaxClique,
    MaxCut,
    #[cfg_attr(feature = "serde", serde(rename = "graphpart"))]
    GraphPartitioning,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [Self::MaxClique, Self::MaxCut, Self::GraphPartitioning];

    pub fn sense(self) -> Sense {
        match self {
            Self::MaxClique | Self::MaxCut => Sense::Maximize,
            Self::GraphPartitioning => Sense::Minimize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::MaxClique => "maxclique",
            Self::MaxCut => "maxcut",
            Self::GraphPartitioning => "graphpart",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("unknown problem {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }

    pub fn best<I: IntoIterator<Item = f64>>(self, values: I) -> Option<f64> {
        values.into_iter().fold(None, |acc, v| match acc {
            Some(b) if !self.better(v, b) => Some(b),
            _ => Some(v),
        })
    }

    /// Sign that turns this sense into minimization.
    pub fn to_min(self) -> f64 {
        match self {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        }
    }
}

/// `H(x) = -Σ x_v + 2 Σ_{(u,v) ∉ E} x_u x_v`.
pub fn maxclique_qubo(g: &ProblemGraph) -> QuboModel {
    let mut q = QuboModel::new();
    for v in 0..g.n {
        q.add_linear(v, -1.0);
    }
    for u in 0..g.n {
        for v in u + 1..g.n {
            if !g.has_edge(u, v) {
                q.add_quadratic(u, v, 2.0).expect("u < v");
            }
        }
    }
    q
}

/// `H(s) = Σ_E s_u s_v`; cut size is `(|E| - H) / 2`.
pub fn maxcut_ising(g: &ProblemGraph) -> IsingModel {
    let mut m = IsingModel::new();
    for v in 0..g.n {
        m.add_variable(v);
    }
    for &(u, v) in &g.edges {
        m.add_quadratic(u, v, 1.0).expect("u < v");
    }
    m
}

/// `H(s) = P (Σ s_v)² + Σ_E (1 - s_u s_v) / 2`, expanded with `s_v² = 1`.
pub fn graphpart_ising(g: &ProblemGraph, balance_penalty: f64) -> Result<IsingModel> {
    if !(balance_penalty > 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "balance penalty {balance_penalty} must be positive"
        )));
    }
    let mut m = IsingModel::new();
    for v in 0..g.n {
        m.add_variable(v);
    }
    m.add_offset(balance_penalty * f64::from(g.n));
    for u in 0..g.n {
        for v in u + 1..g.n {
            m.add_quadratic(u, v, 2.0 * balance_penalty).expect("u < v");
        }
    }
    for &(u, v) in &g.edges {
        m.add_quadratic(u, v, -0.5).expect("u < v");
        m.add_offset(0.5);
    }
    Ok(m)
}

/// `min(2Δ, n) / 8 + 1`.
pub fn default_balance_penalty(g: &ProblemGraph) -> f64 {
    let bound = (2 * g.max_degree()).min(g.n as usize);
    bound as f64 / 8.0 + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Objective {
    Clique { valid: bool, size: usize },
    Cut { size: usize },
    Partition { cut: usize, imbalance: usize },
}

/// Problem-level reading of a spin assignment indexed by vertex.
pub fn evaluate_objective(kind: ProblemKind, g: &ProblemGraph, spins: &[i8]) -> Result<Objective> {
    if spins.len() != g.n as usize {
        return Err(Error::MissingVariable(spins.len() as Var));
    }
    let crossing = || g.edges.iter().filter(|&&(u, v)| spins[u as usize] != spins[v as usize]).count();
    Ok(match kind {
        ProblemKind::MaxClique => {
            let chosen: Vec<Var> = (0..g.n).filter(|&v| spins[v as usize] > 0).collect();
            let valid = chosen
                .iter()
                .enumerate()
                .all(|(i, &u)| chosen[i + 1..].iter().all(|&v| g.has_edge(u, v)));
            Objective::Clique {
                valid,
                size: if valid { chosen.len() } else { 0 },
            }
        }
        ProblemKind::MaxCut => Objective::Cut { size: crossing() },
        ProblemKind::GraphPartitioning => {
            let plus = spins.iter().filter(|&&s| s > 0).count();
            let minus = spins.len() - plus;
            Objective::Partition {
                cut: crossing(),
                imbalance: plus.abs_diff(minus),
            }
        }
    })
}

/// A problem instance with its formulation.
///
/// The score of an assignment is the formulation value read in the
/// problem's own sense: `-H` for MaxClique (the clique size on valid
/// cliques), the cut size for MaxCut and `H` for GraphPartitioning.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub kind: ProblemKind,
    pub graph: ProblemGraph,
    pub balance_penalty: f64,
    ising: IsingModel,
    compiled: CompiledModel,
}

impl Problem {
    pub fn new(kind: ProblemKind, graph: ProblemGraph) -> Self {
        let penalty = default_balance_penalty(&graph);
        Self::with_penalty(kind, graph, penalty).expect("default penalty is positive")
    }

    pub fn with_penalty(kind: ProblemKind, graph: ProblemGraph, balance_penalty: f64) -> Result<Self> {
        let ising = match kind {
            ProblemKind::MaxClique => qubo_to_ising(&maxclique_qubo(&graph)),
            ProblemKind::MaxCut => maxcut_ising(&graph),
            ProblemKind::GraphPartitioning => graphpart_ising(&graph, balance_penalty)?,
        };
        let compiled = ising.compile();
        Ok(Self {
            kind,
            graph,
            balance_penalty,
            ising,
            compiled,
        })
    }

    pub fn sense(&self) -> Sense {
        self.kind.sense()
    }

    /// Logical Ising model over vertices `0..n`.
    pub fn ising(&self) -> &IsingModel {
        &self.ising
    }

    /// Score from the Ising energy of an assignment.
    pub fn score_from_energy(&self, energy: f64) -> f64 {
        match self.kind {
            ProblemKind::MaxClique => -energy,
            ProblemKind::MaxCut => (self.graph.num_edges() as f64 - energy) / 2.0,
            ProblemKind::GraphPartitioning => energy,
        }
    }

    /// Ising energy of spins indexed by vertex.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        self.compiled.energy(spins)
    }

    pub fn score(&self, spins: &[i8]) -> f64 {
        self.score_from_energy(self.energy(spins))
    }

    pub fn name(&self) -> String {
        alloc::format!("{}(n={}, |E|={})", self.kind, self.graph.n, self.graph.num_edges())
    }
}
