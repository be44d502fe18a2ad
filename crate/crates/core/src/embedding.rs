//! Fixed complete-graph minor embeddings on Chimera.
//!
//! Logical variables are `0..k` and chain `v` is `chains[v]`. The canonical
//! construction is the triangle clique embedding: chain `(a, k)` runs along
//! the horizontal line `k` of row `a` up to the diagonal cell `(a, a)` and
//! then down the vertical line `k` of column `a`. Every pair of chains meets
//! in some cell, giving `K_{shore·L}` with chains of length `L + 1`. One more
//! variable is squeezed in by a staircase chain along the superdiagonal that
//! takes over the last shore line of each off-diagonal cell it visits; the
//! other chains get a one-qubit tail to stay in contact with it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hwgraph::{Coord, HardwareGraph, QubitId};
use crate::model::{edge, IsingModel, Var};
use crate::problems::ProblemGraph;
use crate::rng;
use crate::sampler::SampleSet;
use crate::transforms::ChainWeightDistribution;

pub type Chain = Vec<QubitId>;
pub type Coupler = (QubitId, QubitId);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Embedding {
    pub chains: Vec<Chain>,
}

impl Embedding {
    pub fn new(chains: Vec<Chain>) -> Self {
        Self { chains }
    }

    pub fn num_variables(&self) -> usize {
        self.chains.len()
    }

    pub fn chain(&self, v: Var) -> Option<&[QubitId]> {
        self.chains.get(v as usize).map(Vec::as_slice)
    }

    /// Every qubit used, ascending.
    pub fn qubits(&self) -> Vec<QubitId> {
        let mut all: Vec<QubitId> = self.chains.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn num_qubits(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn max_chain_length(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Qubit to owning variable.
    pub fn owners(&self) -> BTreeMap<QubitId, Var> {
        self.chains
            .iter()
            .enumerate()
            .flat_map(|(v, c)| c.iter().map(move |&q| (q, v as Var)))
            .collect()
    }

    /// Physical couplers inside each chain and between each pair of chains.
    pub fn couplers(&self, hw: &HardwareGraph) -> EmbeddingCouplers {
        let owners = self.owners();
        let mut intra = alloc::vec![Vec::new(); self.chains.len()];
        let mut inter: BTreeMap<(Var, Var), Vec<Coupler>> = BTreeMap::new();
        for (a, b) in hw.couplers() {
            if let (Some(&u), Some(&v)) = (owners.get(&a), owners.get(&b)) {
                if u == v {
                    intra[u as usize].push((a, b));
                } else {
                    inter.entry(edge(u, v)).or_default().push((a, b));
                }
            }
        }
        EmbeddingCouplers { intra, inter }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingCouplers {
    pub intra: Vec<Vec<Coupler>>,
    pub inter: BTreeMap<(Var, Var), Vec<Coupler>>,
}

fn require_square_ideal(hw: &HardwareGraph) -> Result<u32> {
    let spec = hw.spec();
    if spec.shore < 2 {
        return Err(Error::InvalidSpec("clique embedding needs shore >= 2".into()));
    }
    if spec.rows != spec.cols {
        return Err(Error::InvalidSpec(format!(
            "clique embedding needs a square grid, got {}x{}",
            spec.rows, spec.cols
        )));
    }
    Ok(spec.rows)
}

/// Largest complete graph [`clique_embedding`] can place on `hw`.
pub fn clique_capacity(hw: &HardwareGraph) -> usize {
    let spec = hw.spec();
    let l = spec.rows.min(spec.cols) as usize;
    let s = spec.shore as usize;
    if l == 1 || s == 1 {
        s + 1
    } else {
        s * l + 1
    }
}

/// Deterministic embedding of `K_k` on a square Chimera grid.
pub fn clique_embedding(hw: &HardwareGraph, k: usize) -> Result<Embedding> {
    let l = require_square_ideal(hw)?;
    let spec = hw.spec();
    let s = spec.shore;
    let capacity = clique_capacity(hw);
    if k > capacity {
        return Err(Error::Capacity { requested: k, capacity });
    }
    let q = |row: u32, col: u32, side: u8, line: u32| spec.qubit_id(Coord::new(row, col, side, line));

    let chains: Vec<Chain> = if k <= s as usize + 1 {
        // One cell: lines i < s-1 pair their horizontal and vertical qubit,
        // the last line contributes two singleton chains.
        let mut cell: Vec<Chain> = (0..s - 1).map(|i| alloc::vec![q(0, 0, 1, i), q(0, 0, 0, i)]).collect();
        cell.push(alloc::vec![q(0, 0, 1, s - 1)]);
        cell.push(alloc::vec![q(0, 0, 0, s - 1)]);
        cell.split_off(cell.len() - k)
    } else if k <= (s * l) as usize {
        let sub = (k as u32).div_ceil(s);
        let mut tri = triangle(sub, s, &q);
        tri.truncate(k);
        tri
    } else {
        let sub = (k as u32 - 1) / s;
        staircase(sub, s, &q)
    };

    let emb = Embedding::new(chains);
    for (v, chain) in emb.chains.iter().enumerate() {
        if let Some(&dead) = chain.iter().find(|&&qb| !hw.is_working(qb)) {
            return Err(Error::EmbeddingFailure(format!("chain {v} needs dead qubit {dead}")));
        }
    }
    Ok(emb)
}

fn triangle(l: u32, s: u32, q: &impl Fn(u32, u32, u8, u32) -> QubitId) -> Vec<Chain> {
    let mut chains = Vec::with_capacity((l * s) as usize);
    for a in 0..l {
        for line in 0..s {
            let mut chain: Chain = (0..=a).map(|col| q(a, col, 1, line)).collect();
            chain.extend((a..l).map(|row| q(row, a, 0, line)));
            chains.push(chain);
        }
    }
    chains
}

fn staircase(l: u32, s: u32, q: &impl Fn(u32, u32, u8, u32) -> QubitId) -> Vec<Chain> {
    debug_assert!(l >= 2);
    let last = s - 1;
    let mut chains = triangle(l, s, q);
    for a in 0..l {
        for line in 0..last {
            let tail = if a + 1 < l { q(a, a + 1, 1, line) } else { q(l - 2, l - 1, 0, line) };
            chains[(a * s + line) as usize].push(tail);
        }
    }
    let mut extra = Vec::new();
    for a in 0..l - 1 {
        extra.push(q(a, a + 1, 1, last));
        extra.push(q(a, a + 1, 0, last));
        if a + 2 < l {
            extra.push(q(a, a + 2, 1, last));
            extra.push(q(a, a + 2, 0, last));
        }
    }
    chains.push(extra);
    chains
}

/// Problems found by [`validate_embedding`].
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "subject", rename_all = "snake_case"))]
pub enum Violation {
    MissingChain(Var),
    EmptyChain(Var),
    DeadQubit { var: Var, qubit: QubitId },
    Disconnected(Var),
    SharedQubit { qubit: QubitId, vars: (Var, Var) },
    UncoveredEdge(Var, Var),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_embedding(hw: &HardwareGraph, problem: &ProblemGraph, emb: &Embedding) -> ValidationReport {
    let mut violations = Vec::new();
    for v in emb.chains.len() as Var..problem.n {
        violations.push(Violation::MissingChain(v));
    }
    let mut owner: BTreeMap<QubitId, Var> = BTreeMap::new();
    for (v, chain) in emb.chains.iter().enumerate() {
        let v = v as Var;
        if chain.is_empty() {
            violations.push(Violation::EmptyChain(v));
            continue;
        }
        for &qb in chain {
            if !hw.is_working(qb) {
                violations.push(Violation::DeadQubit { var: v, qubit: qb });
            }
            if let Some(&other) = owner.get(&qb) {
                if other != v {
                    violations.push(Violation::SharedQubit { qubit: qb, vars: (other, v) });
                }
            } else {
                owner.insert(qb, v);
            }
        }
        if !connected(hw, chain) {
            violations.push(Violation::Disconnected(v));
        }
    }
    let chain_sets: Vec<BTreeSet<QubitId>> = emb.chains.iter().map(|c| c.iter().copied().collect()).collect();
    for &(u, v) in &problem.edges {
        let (Some(cu), Some(cv)) = (emb.chain(u), chain_sets.get(v as usize)) else {
            continue;
        };
        let touching = cu.iter().any(|&a| {
            hw.is_working(a) && hw.neighbors(a).is_ok_and(|nb| nb.iter().any(|b| cv.contains(b)))
        });
        if !touching {
            violations.push(Violation::UncoveredEdge(u, v));
        }
    }
    ValidationReport { violations }
}

fn connected(hw: &HardwareGraph, chain: &[QubitId]) -> bool {
    let members: BTreeSet<QubitId> = chain.iter().copied().filter(|&q| hw.is_working(q)).collect();
    if members.len() != chain.iter().collect::<BTreeSet<_>>().len() {
        return false;
    }
    let Some(&start) = members.iter().next() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = alloc::vec![start];
    while let Some(a) = stack.pop() {
        for &b in hw.neighbors(a).unwrap_or(&[]) {
            if members.contains(&b) && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    seen.len() == members.len()
}

/// `count` variants of `emb` under random Chimera automorphisms and a random
/// relabeling of logical variables.
pub fn random_embedding_variants(
    hw: &HardwareGraph,
    emb: &Embedding,
    count: usize,
    seed: u64,
) -> Vec<Embedding> {
    const ATTEMPTS: u64 = 64;
    let spec = hw.spec();
    (0..count as u64)
        .map(|i| {
            let mut fallback = None;
            for attempt in 0..ATTEMPTS {
                let mut rng = rng::rng_from(seed, &[rng::tag("variant"), i, attempt]);
                let map = Automorphism::random(spec, &mut rng);
                let mut chains: Vec<Chain> = emb
                    .chains
                    .iter()
                    .map(|c| c.iter().map(|&q| map.apply(spec, q)).collect())
                    .collect();
                chains.shuffle(&mut rng);
                if fallback.is_none() {
                    let mut relabeled = emb.chains.clone();
                    relabeled.shuffle(&mut rng);
                    fallback = Some(relabeled);
                }
                if chains.iter().flatten().all(|&q| hw.is_working(q)) {
                    return Embedding::new(chains);
                }
            }
            Embedding::new(fallback.unwrap_or_default())
        })
        .collect()
}

#[derive(Debug)]
struct Automorphism {
    transpose: bool,
    flip_rows: bool,
    flip_cols: bool,
    // line permutation for vertical qubits per column, horizontal per row
    vertical: Vec<Vec<u32>>,
    horizontal: Vec<Vec<u32>>,
}

impl Automorphism {
    fn random(spec: crate::hwgraph::ChimeraSpec, rng: &mut rng::Rng) -> Self {
        let perm = |rng: &mut rng::Rng| {
            let mut p: Vec<u32> = (0..spec.shore).collect();
            p.shuffle(rng);
            p
        };
        Self {
            transpose: spec.rows == spec.cols && rng.random_bool(0.5),
            flip_rows: rng.random_bool(0.5),
            flip_cols: rng.random_bool(0.5),
            vertical: (0..spec.cols).map(|_| perm(rng)).collect(),
            horizontal: (0..spec.rows).map(|_| perm(rng)).collect(),
        }
    }

    fn apply(&self, spec: crate::hwgraph::ChimeraSpec, q: QubitId) -> QubitId {
        let mut c = spec.coord(q);
        if self.transpose {
            c = Coord::new(c.col, c.row, 1 - c.side, c.k);
        }
        if self.flip_rows {
            c.row = spec.rows - 1 - c.row;
        }
        if self.flip_cols {
            c.col = spec.cols - 1 - c.col;
        }
        c.k = if c.side == 0 {
            self.vertical[c.col as usize][c.k as usize]
        } else {
            self.horizontal[c.row as usize][c.k as usize]
        };
        spec.qubit_id(c)
    }
}

/// Physical model produced by [`embed_ising`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedIsing {
    pub physical: IsingModel,
    pub chain_couplers: Vec<Coupler>,
    pub logical_edge_couplers: BTreeMap<(Var, Var), Vec<Coupler>>,
    pub chain_strength: f64,
}

/// Spread a logical Ising model over the chains of `emb`.
///
/// Linear biases split over each chain's qubits and couplers over the
/// physical couplers joining two chains, uniformly unless `cw` gives
/// shares; every intra-chain coupler gets `-chain_strength`.
pub fn embed_ising(
    logical: &IsingModel,
    emb: &Embedding,
    couplers: &EmbeddingCouplers,
    chain_strength: f64,
    cw: Option<&ChainWeightDistribution>,
) -> Result<EmbeddedIsing> {
    if !(chain_strength > 0.0) || !chain_strength.is_finite() {
        return Err(Error::InvalidInput(format!("chain strength {chain_strength} must be positive")));
    }
    let mut physical = IsingModel::new();
    physical.set_offset(logical.offset());
    let mut chain_couplers = Vec::new();
    for (&v, &h) in logical.linear_terms() {
        let chain = emb.chain(v).ok_or(Error::MissingVariable(v))?;
        let shares = cw.and_then(|w| w.linear_shares.get(v as usize)).filter(|s| s.len() == chain.len());
        for (i, &q) in chain.iter().enumerate() {
            let share = shares.map_or(1.0 / chain.len() as f64, |s| s[i]);
            physical.add_linear(q, h * share);
        }
        for &(a, b) in &couplers.intra[v as usize] {
            physical.set_quadratic(a, b, -chain_strength)?;
            chain_couplers.push((a, b));
        }
    }
    let mut logical_edge_couplers = BTreeMap::new();
    for (&(u, v), &j) in logical.quadratic_terms() {
        let between = couplers.inter.get(&(u, v)).filter(|c| !c.is_empty()).ok_or(Error::Coverage(u, v))?;
        if j == 0.0 {
            continue;
        }
        let shares = cw.and_then(|w| w.quadratic_shares.get(&(u, v))).filter(|s| s.len() == between.len());
        for (i, &(a, b)) in between.iter().enumerate() {
            let share = shares.map_or(1.0 / between.len() as f64, |s| s[i]);
            physical.set_quadratic(a, b, j * share)?;
        }
        logical_edge_couplers.insert((u, v), between.clone());
    }
    chain_couplers.sort_unstable();
    Ok(EmbeddedIsing {
        physical,
        chain_couplers,
        logical_edge_couplers,
        chain_strength,
    })
}

/// One logical read after majority vote.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogicalRead {
    pub spins: Vec<i8>,
    pub broken: Vec<bool>,
    pub num_occurrences: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogicalSampleSet {
    pub reads: Vec<LogicalRead>,
}

impl LogicalSampleSet {
    pub fn num_reads(&self) -> u64 {
        self.reads.iter().map(|r| r.num_occurrences).sum()
    }
}

fn chain_positions(samples: &SampleSet, emb: &Embedding) -> Result<Vec<Vec<usize>>> {
    emb.chains
        .iter()
        .enumerate()
        .map(|(v, chain)| {
            chain
                .iter()
                .map(|q| {
                    samples
                        .variables
                        .binary_search(q)
                        .map_err(|_| Error::InvalidInput(format!("sample lacks qubit {q} of chain {v}")))
                })
                .collect()
        })
        .collect()
}

/// Resolve each chain to a logical spin by strict majority, ties by a
/// coin seeded from `(seed, read, chain)`.
pub fn unembed_majority_vote(samples: &SampleSet, emb: &Embedding, seed: u64) -> Result<LogicalSampleSet> {
    let positions = chain_positions(samples, emb)?;
    let reads = samples
        .reads
        .iter()
        .enumerate()
        .map(|(r, read)| {
            let mut spins = Vec::with_capacity(positions.len());
            let mut broken = Vec::with_capacity(positions.len());
            for (v, pos) in positions.iter().enumerate() {
                let up = pos.iter().filter(|&&i| read.spins[i] > 0).count();
                let down = pos.len() - up;
                broken.push(up != 0 && down != 0);
                spins.push(match up.cmp(&down) {
                    core::cmp::Ordering::Greater => 1,
                    core::cmp::Ordering::Less => -1,
                    core::cmp::Ordering::Equal => {
                        let mut coin = rng::rng_from(seed, &[r as u64, v as u64]);
                        if coin.random_bool(0.5) { 1 } else { -1 }
                    }
                });
            }
            LogicalRead {
                spins,
                broken,
                num_occurrences: read.num_occurrences,
            }
        })
        .collect();
    Ok(LogicalSampleSet { reads })
}

/// Fraction of (read, chain) pairs whose qubits disagree, weighting each
/// aggregated read by its occurrence count.
pub fn chain_break_fraction(samples: &SampleSet, emb: &Embedding) -> Result<f64> {
    let positions = chain_positions(samples, emb)?;
    let total = samples.num_reads() * positions.len() as u64;
    if total == 0 {
        return Ok(0.0);
    }
    let broken: u64 = samples
        .reads
        .iter()
        .map(|read| {
            let n = positions
                .iter()
                .filter(|pos| pos.iter().any(|&i| read.spins[i] != read.spins[pos[0]]))
                .count() as u64;
            n * read.num_occurrences
        })
        .sum();
    Ok(broken as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hwgraph::{build_chimera, ChimeraSpec};
    use crate::sampler::Read;

    fn chimera(l: u32) -> HardwareGraph {
        build_chimera(ChimeraSpec::square(l)).unwrap()
    }

    #[test]
    fn capacities() {
        assert_eq!(clique_capacity(&chimera(1)), 5);
        assert_eq!(clique_capacity(&chimera(3)), 13);
        assert_eq!(clique_capacity(&chimera(16)), 65);
        assert_eq!(
            clique_embedding(&chimera(3), 14),
            Err(Error::Capacity { requested: 14, capacity: 13 })
        );
    }

    #[test]
    fn clique_embeddings_validate() {
        for (l, shore) in (1..=6).flat_map(|l| (2..=6).map(move |s| (l, s))) {
            let hw = build_chimera(ChimeraSpec::new(l, l, shore)).unwrap();
            for k in 1..=clique_capacity(&hw) {
                let emb = clique_embedding(&hw, k).unwrap();
                assert_eq!(emb.num_variables(), k);
                let report = validate_embedding(&hw, &ProblemGraph::complete(k as u32), &emb);
                assert!(report.is_valid(), "L={l} shore={shore} k={k}: {:?}", report.violations);
            }
        }
    }

    #[test]
    fn single_variable_has_one_qubit() {
        let emb = clique_embedding(&chimera(16), 1).unwrap();
        assert_eq!(emb.chains.len(), 1);
        assert_eq!(emb.chains[0].len(), 1);
    }

    #[test]
    fn staircase_chain_lengths() {
        for l in 2..=8u32 {
            let emb = clique_embedding(&chimera(l), (4 * l + 1) as usize).unwrap();
            let extra = emb.chains.last().unwrap().len();
            assert_eq!(extra as u32, 4 * l - 6);
            let others = emb.chains[..emb.chains.len() - 1].iter().map(Vec::len).max().unwrap();
            assert!(others as u32 <= l + 2);
        }
    }

    #[test]
    fn defects_break_the_construction() {
        let hw = chimera(2);
        let emb = clique_embedding(&hw, 9).unwrap();
        let broken = hw.remove_qubits(&[emb.chains[0][0]]).unwrap();
        assert!(matches!(clique_embedding(&broken, 9), Err(Error::EmbeddingFailure(_))));
    }

    #[test]
    fn validation_reports_constructed_faults() {
        let hw = chimera(2);
        let k5 = ProblemGraph::complete(5);
        let mut emb = clique_embedding(&hw, 5).unwrap();
        let shared = emb.chains[0][0];
        emb.chains[1].push(shared);
        let report = validate_embedding(&hw, &k5, &emb);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::SharedQubit { .. })));

        // two qubits of the same side in one cell are never coupled
        let same_side = Embedding::new(alloc::vec![alloc::vec![0], alloc::vec![1]]);
        let edge01 = ProblemGraph::complete(2);
        assert_eq!(
            validate_embedding(&hw, &edge01, &same_side).violations,
            alloc::vec![Violation::UncoveredEdge(0, 1)]
        );

        let split = Embedding::new(alloc::vec![alloc::vec![0, 1]]);
        assert_eq!(
            validate_embedding(&hw, &ProblemGraph::empty(1), &split).violations,
            alloc::vec![Violation::Disconnected(0)]
        );
    }

    #[test]
    fn variants_are_valid_and_reproducible() {
        let hw = chimera(4);
        let emb = clique_embedding(&hw, 17).unwrap();
        let k17 = ProblemGraph::complete(17);
        let variants = random_embedding_variants(&hw, &emb, 10, 3);
        assert_eq!(variants.len(), 10);
        for v in &variants {
            assert!(validate_embedding(&hw, &k17, v).is_valid());
            assert_ne!(v, &emb);
        }
        assert_eq!(variants, random_embedding_variants(&hw, &emb, 10, 3));
        assert!(random_embedding_variants(&hw, &emb, 0, 3).is_empty());
    }

    #[test]
    fn variants_avoid_dead_qubits() {
        let hw = chimera(4);
        let emb = clique_embedding(&hw, 9).unwrap();
        let defective = hw.remove_qubits(&[hw.qubit_id(Coord::new(3, 3, 0, 0))]).unwrap();
        let k9 = ProblemGraph::complete(9);
        for v in random_embedding_variants(&defective, &emb, 10, 1) {
            assert!(validate_embedding(&defective, &k9, &v).is_valid());
        }
    }

    fn ising(n: u32, seed: u64) -> IsingModel {
        let mut rng = rng::rng_from(seed, &[]);
        let mut m = IsingModel::new();
        for v in 0..n {
            m.add_linear(v, rng.random_range(-1.0..1.0));
            for u in 0..v {
                m.add_quadratic(u, v, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        m
    }

    #[test]
    fn uniform_shares_on_a_seven_qubit_chain() {
        let hw = chimera(6);
        let emb = clique_embedding(&hw, 24).unwrap();
        let v = emb.chains.iter().position(|c| c.len() == 7).unwrap() as Var;
        let mut m = IsingModel::new();
        m.add_linear(v, 0.7);
        let e = embed_ising(&m, &emb, &emb.couplers(&hw), 1.0, None).unwrap();
        for &q in &emb.chains[v as usize] {
            assert!((e.physical.linear(q).unwrap() - 0.1).abs() < 1e-12);
        }
        assert!(e.chain_couplers.iter().all(|&(a, b)| e.physical.quadratic(a, b) == Some(-1.0)));
    }

    #[test]
    fn weights_are_conserved() {
        let hw = chimera(3);
        let emb = clique_embedding(&hw, 13).unwrap();
        let couplers = emb.couplers(&hw);
        let m = ising(13, 4);
        let e = embed_ising(&m, &emb, &couplers, 2.0, None).unwrap();
        for (v, chain) in emb.chains.iter().enumerate() {
            let total: f64 = chain.iter().map(|&q| e.physical.linear(q).unwrap()).sum();
            assert!((total - m.linear(v as Var).unwrap()).abs() < 1e-12);
        }
        for (&(u, v), set) in &e.logical_edge_couplers {
            let total: f64 = set.iter().map(|&(a, b)| e.physical.quadratic(a, b).unwrap()).sum();
            assert!((total - m.quadratic(u, v).unwrap()).abs() < 1e-12);
            assert!(set.iter().all(|c| e.chain_couplers.binary_search(c).is_err()));
        }
        assert!(embed_ising(&m, &emb, &couplers, 0.0, None).is_err());
    }

    #[test]
    fn uncovered_edge_is_an_error() {
        let hw = chimera(2);
        let emb = Embedding::new(alloc::vec![alloc::vec![0], alloc::vec![1]]);
        let mut m = IsingModel::new();
        m.add_quadratic(0, 1, 1.0).unwrap();
        assert_eq!(
            embed_ising(&m, &emb, &emb.couplers(&hw), 1.0, None),
            Err(Error::Coverage(0, 1))
        );
    }

    fn sample_set(variables: Vec<QubitId>, reads: Vec<Vec<i8>>) -> SampleSet {
        SampleSet {
            variables,
            reads: reads
                .into_iter()
                .map(|spins| Read {
                    spins,
                    energy: 0.0,
                    num_occurrences: 1,
                })
                .collect(),
            qpu_time_us: 0.0,
        }
    }

    #[test]
    fn majority_vote_cases() {
        let emb = Embedding::new(alloc::vec![alloc::vec![0, 1, 2], alloc::vec![3, 4]]);
        let s = sample_set(alloc::vec![0, 1, 2, 3, 4], alloc::vec![alloc::vec![1, 1, -1, 1, 1]]);
        let out = unembed_majority_vote(&s, &emb, 7).unwrap();
        assert_eq!(out.reads[0].spins, alloc::vec![1, 1]);
        assert_eq!(out.reads[0].broken, alloc::vec![true, false]);

        let tie = sample_set(alloc::vec![0, 1, 2, 3, 4], alloc::vec![alloc::vec![1, 1, 1, 1, -1]]);
        let a = unembed_majority_vote(&tie, &emb, 7).unwrap();
        assert_eq!(a, unembed_majority_vote(&tie, &emb, 7).unwrap());
        assert!(a.reads[0].broken[1]);

        let short = sample_set(alloc::vec![0, 1, 2], alloc::vec![alloc::vec![1, 1, 1]]);
        assert!(unembed_majority_vote(&short, &emb, 7).is_err());
    }

    #[test]
    fn break_fraction_cases() {
        let emb = Embedding::new((0..10).map(|v| alloc::vec![2 * v, 2 * v + 1]).collect());
        let vars: Vec<QubitId> = (0..20).collect();
        let clean = sample_set(vars.clone(), alloc::vec![alloc::vec![1; 20]; 10]);
        assert_eq!(chain_break_fraction(&clean, &emb).unwrap(), 0.0);

        let alternating: Vec<i8> = (0..20).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let all = sample_set(vars.clone(), alloc::vec![alternating; 10]);
        assert_eq!(chain_break_fraction(&all, &emb).unwrap(), 1.0);

        let mut reads = alloc::vec![alloc::vec![1; 20]; 10];
        reads[3][0] = -1;
        let one = sample_set(vars, reads);
        assert!((chain_break_fraction(&one, &emb).unwrap() - 0.01).abs() < 1e-15);
    }
}
