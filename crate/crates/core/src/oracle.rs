//! Exact solvers for desk-scale instances.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Model, Var, Vartype};
use crate::problems::ProblemGraph;

pub const GROUND_STATE_LIMIT: usize = 24;
pub const WITNESS_CAP: usize = 64;
pub const CLIQUE_LIMIT: usize = 64;
pub const CUT_LIMIT: usize = 24;
pub const PARTITION_LIMIT: usize = 22;

const TOLERANCE: f64 = 1e-9;
const RECOMPUTE_EVERY: u64 = 1 << 12;

/// Minimum energy and the minimizers found, as value vectors in
/// ascending variable order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundState {
    pub variables: Vec<Var>,
    pub energy: f64,
    pub witnesses: Vec<Vec<i8>>,
}

/// Optimum of a graph problem with one witness vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphOptimum {
    pub value: usize,
    pub witness: Vec<Var>,
}

/// Exhaustive minimization by Gray-code enumeration.
pub fn exact_ground_state<T: Vartype>(model: &Model<T>, limit: usize) -> Result<GroundState> {
    let n = model.num_variables();
    if n > limit {
        return Err(Error::TooLarge { variables: n, limit });
    }
    let m = model.compile();
    let [lo, hi] = T::VALUES;
    let mut x = alloc::vec![lo; n];
    let field = |x: &[i8]| -> Vec<f64> { (0..n).map(|i| m.local_field(i, x)).collect() };
    let mut f = field(&x);
    let mut e = m.energy(&x);
    let mut best = e;
    let mut witnesses = alloc::vec![x.clone()];

    for step in 1..1u64 << n {
        let i = step.trailing_zeros() as usize;
        let old = x[i];
        let new = if old == lo { hi } else { lo };
        let dx = f64::from(new - old);
        e += dx * f[i];
        x[i] = new;
        for &(j, w) in &m.adjacency[i] {
            f[j] += w * dx;
        }
        if step % RECOMPUTE_EVERY == 0 {
            f = field(&x);
            e = m.energy(&x);
        }
        if e < best - TOLERANCE {
            best = e;
            witnesses.clear();
            witnesses.push(x.clone());
        } else if e <= best + TOLERANCE && witnesses.len() < WITNESS_CAP {
            witnesses.push(x.clone());
        }
    }
    // drop near-ties that a later, strictly better state superseded
    let exact: Vec<f64> = witnesses.iter().map(|w| m.energy(w)).collect();
    let energy = exact.iter().copied().fold(f64::INFINITY, f64::min);
    let witnesses = witnesses
        .into_iter()
        .zip(exact)
        .filter(|(_, v)| *v <= energy + TOLERANCE)
        .map(|(w, _)| w)
        .collect();
    Ok(GroundState {
        variables: m.variables.clone(),
        energy,
        witnesses,
    })
}

/// Branch and bound with a greedy-coloring bound over bitsets.
pub fn max_clique_exact(g: &ProblemGraph) -> Result<GraphOptimum> {
    let n = g.n as usize;
    if n > CLIQUE_LIMIT {
        return Err(Error::TooLarge { variables: n, limit: CLIQUE_LIMIT });
    }
    if n == 0 {
        return Ok(GraphOptimum { value: 0, witness: Vec::new() });
    }
    let adj = g.adjacency_bits();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = Vec::new();
    let mut current = Vec::new();
    expand(&adj, all, &mut current, &mut best);
    best.sort_unstable();
    Ok(GraphOptimum {
        value: best.len(),
        witness: best,
    })
}

fn expand(adj: &[u64], candidates: u64, current: &mut Vec<Var>, best: &mut Vec<Var>) {
    let (order, colors) = color_sort(adj, candidates);
    let mut remaining = candidates;
    for idx in (0..order.len()).rev() {
        if current.len() + colors[idx] <= best.len() {
            return;
        }
        let v = order[idx];
        current.push(v as Var);
        let next = remaining & adj[v];
        if next == 0 {
            if current.len() > best.len() {
                best.clone_from(current);
            }
        } else {
            expand(adj, next, current, best);
        }
        current.pop();
        remaining &= !(1u64 << v);
    }
}

/// Greedy sequential coloring; returns vertices in nondecreasing color
/// order along with the color count up to each position.
fn color_sort(adj: &[u64], candidates: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order = Vec::with_capacity(candidates.count_ones() as usize);
    let mut colors = Vec::with_capacity(order.capacity());
    let mut uncolored = candidates;
    let mut color = 0;
    while uncolored != 0 {
        color += 1;
        let mut available = uncolored;
        while available != 0 {
            let v = available.trailing_zeros() as usize;
            available &= !(1u64 << v) & !adj[v];
            uncolored &= !(1u64 << v);
            order.push(v);
            colors.push(color);
        }
    }
    (order, colors)
}

/// Maximum cut by Gray-code enumeration with the last vertex pinned.
pub fn max_cut_exact(g: &ProblemGraph) -> Result<GraphOptimum> {
    let n = g.n as usize;
    if n > CUT_LIMIT {
        return Err(Error::TooLarge { variables: n, limit: CUT_LIMIT });
    }
    if n <= 1 {
        return Ok(GraphOptimum { value: 0, witness: Vec::new() });
    }
    let adj = g.adjacency_bits();
    let mut side = 0u64;
    let mut cut: i64 = 0;
    let mut best = (0i64, 0u64);
    for step in 1..1u64 << (n - 1) {
        let v = step.trailing_zeros() as usize;
        let same = i64::from((adj[v] & side).count_ones());
        let deg = i64::from(adj[v].count_ones());
        if side >> v & 1 == 1 {
            // leaving the set: edges into the set become cut, edges out stop being cut
            cut += 2 * same - deg;
        } else {
            cut += deg - 2 * same;
        }
        side ^= 1 << v;
        if cut > best.0 {
            best = (cut, side);
        }
    }
    Ok(GraphOptimum {
        value: best.0 as usize,
        witness: bits_to_vertices(best.1),
    })
}

/// Minimum cut over partitions whose sides differ in size by at most one.
pub fn graph_partition_exact(g: &ProblemGraph) -> Result<GraphOptimum> {
    let n = g.n as usize;
    if n > PARTITION_LIMIT {
        return Err(Error::TooLarge { variables: n, limit: PARTITION_LIMIT });
    }
    let adj = g.adjacency_bits();
    let all = (1u64 << n) - 1;
    let k = n / 2;
    let cut_of = |s: u64| -> usize {
        bits_to_vertices(s)
            .into_iter()
            .map(|v| (adj[v as usize] & !s & all).count_ones() as usize)
            .sum()
    };
    if k == 0 {
        return Ok(GraphOptimum { value: 0, witness: Vec::new() });
    }
    let mut s = (1u64 << k) - 1;
    let mut best = (usize::MAX, s);
    while s <= all {
        let c = cut_of(s);
        if c < best.0 {
            best = (c, s);
        }
        // Gosper's hack: next subset with the same popcount
        let low = s & s.wrapping_neg();
        let ripple = s + low;
        s = (((ripple ^ s) >> 2) / low) | ripple;
    }
    Ok(GraphOptimum {
        value: best.0,
        witness: bits_to_vertices(best.1),
    })
}

fn bits_to_vertices(mut s: u64) -> Vec<Var> {
    let mut out = Vec::with_capacity(s.count_ones() as usize);
    while s != 0 {
        out.push(s.trailing_zeros());
        s &= s - 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IsingModel;
    use crate::problems::{gen_random_graph, maxcut_ising};

    #[test]
    fn ground_state_examples() {
        let mut one = IsingModel::new();
        one.add_linear(0, 1.0);
        let gs = exact_ground_state(&one, GROUND_STATE_LIMIT).unwrap();
        assert_eq!(gs.energy, -1.0);
        assert_eq!(gs.witnesses, alloc::vec![alloc::vec![-1]]);

        let tri = maxcut_ising(&ProblemGraph::complete(3));
        let gs = exact_ground_state(&tri, GROUND_STATE_LIMIT).unwrap();
        assert_eq!(gs.energy, -1.0);
        assert_eq!(gs.witnesses.len(), 6);

        let mut zero = IsingModel::new();
        (0..3).for_each(|v| zero.add_variable(v));
        zero.set_offset(1.5);
        let gs = exact_ground_state(&zero, GROUND_STATE_LIMIT).unwrap();
        assert_eq!(gs.energy, 1.5);
        assert_eq!(gs.witnesses.len(), 8);

        let mut wide = IsingModel::new();
        (0..70).for_each(|v| wide.add_variable(v));
        assert_eq!(
            exact_ground_state(&wide, GROUND_STATE_LIMIT),
            Err(Error::TooLarge { variables: 70, limit: 24 })
        );
    }

    #[test]
    fn witness_cap_applies() {
        let mut zero = IsingModel::new();
        (0..10).for_each(|v| zero.add_variable(v));
        let gs = exact_ground_state(&zero, GROUND_STATE_LIMIT).unwrap();
        assert_eq!(gs.witnesses.len(), WITNESS_CAP);
    }

    #[test]
    fn clique_examples() {
        assert_eq!(max_clique_exact(&ProblemGraph::complete(5)).unwrap().value, 5);
        assert_eq!(max_clique_exact(&ProblemGraph::cycle(5)).unwrap().value, 2);
        assert_eq!(max_clique_exact(&ProblemGraph::empty(4)).unwrap().value, 1);
        assert_eq!(max_clique_exact(&ProblemGraph::complete(64)).unwrap().value, 64);
    }

    #[test]
    fn cut_and_partition_examples() {
        assert_eq!(max_cut_exact(&ProblemGraph::complete(4)).unwrap().value, 4);
        assert_eq!(graph_partition_exact(&ProblemGraph::cycle(4)).unwrap().value, 2);
        assert_eq!(max_cut_exact(&ProblemGraph::empty(5)).unwrap().value, 0);
        assert_eq!(graph_partition_exact(&ProblemGraph::empty(5)).unwrap().value, 0);
        assert!(max_cut_exact(&ProblemGraph::empty(25)).is_err());
        assert!(graph_partition_exact(&ProblemGraph::empty(23)).is_err());
    }

    #[test]
    fn witnesses_attain_the_optimum() {
        for seed in 0..20 {
            let g = gen_random_graph(12, 0.5, seed).unwrap();
            let clique = max_clique_exact(&g).unwrap();
            assert_eq!(clique.witness.len(), clique.value);
            for (i, &u) in clique.witness.iter().enumerate() {
                assert!(clique.witness[i + 1..].iter().all(|&v| g.has_edge(u, v)));
            }

            let crossing = |w: &[Var]| g.edges.iter().filter(|(u, v)| w.contains(u) != w.contains(v)).count();
            let cut = max_cut_exact(&g).unwrap();
            assert_eq!(crossing(&cut.witness), cut.value);
            let part = graph_partition_exact(&g).unwrap();
            assert_eq!(crossing(&part.witness), part.value);
            assert_eq!(part.witness.len(), 6);
        }
    }
}
