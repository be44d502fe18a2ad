//! One annealing run end to end, technique search spaces, and the
//! training objective handed to differential evolution.
//!
//! A run embeds the logical model, auto-scales it, applies the spin-reversal
//! mask, passes it through the machine's bias model, samples with the anneal
//! offsets, undoes the reversal, unembeds by majority vote and scores every
//! read with the problem's formulation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::embedding::{chain_break_fraction, embed_ising, unembed_majority_vote, Embedding, EmbeddingCouplers};
use crate::error::{Error, Result};
use crate::hwgraph::{HardwareGraph, QubitId};
use crate::metrics::bin_value;
use crate::model::Var;
use crate::optimizer::{
    decode_binary, decode_grid, encode_binary, encode_grid, DimSpec, Fitness, SearchSpace,
};
use crate::problems::Problem;
use crate::rng;
use crate::sampler::{apply_bias_model, sample, AnnealConfig, BiasModel};
use crate::transforms::{
    apply_spin_reversal, auto_scale, default_random_mask, expand_chain_mask, expand_chain_offsets, invert_spins,
    snap_offsets, ChainWeightDistribution, CwMode, Level, OffsetVector, ParameterVector, SpinReversalMask, Technique,
    H_MAX, J_MAX,
};

/// Fixed ingredients shared by every run on one virtual machine.
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub hw: &'a HardwareGraph,
    pub emb: &'a Embedding,
    pub couplers: &'a EmbeddingCouplers,
    pub bias: &'a BiasModel,
    pub anneal: &'a AnnealConfig,
}

/// Hardware parameters of a run; `None` means the default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Setting {
    /// Qubit-level mask.
    pub mask: Option<SpinReversalMask>,
    pub offsets: Option<OffsetVector>,
    pub chain_weights: Option<ChainWeightDistribution>,
}

impl Setting {
    pub fn from_parameters(params: &ParameterVector, emb: &Embedding) -> Result<Self> {
        Ok(match params {
            ParameterVector::SpinReversal(mask) => Self {
                mask: Some(match mask.level {
                    Level::Qubit => mask.clone(),
                    Level::Chain => expand_chain_mask(mask, emb)?,
                }),
                ..Self::default()
            },
            ParameterVector::Offsets(o) => Self {
                offsets: Some(o.clone()),
                ..Self::default()
            },
            ParameterVector::ChainWeights(cw) => Self {
                chain_weights: Some(cw.clone()),
                ..Self::default()
            },
        })
    }
}

/// Scores of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunOutcome {
    /// `(score, count)` sorted by score.
    pub histogram: Vec<(f64, u64)>,
    pub best_score: f64,
    pub mean_score: f64,
    /// Logical Ising energy of the best-scoring read.
    pub best_energy: f64,
    pub chain_break_fraction: f64,
    pub qpu_time_us: f64,
    pub reads: u64,
}

pub fn solve(problem: &Problem, ctx: RunContext<'_>, setting: &Setting, chain_strength: f64, seed: u64) -> Result<RunOutcome> {
    let embedded = embed_ising(
        problem.ising(),
        ctx.emb,
        ctx.couplers,
        chain_strength,
        setting.chain_weights.as_ref(),
    )?;
    let (scaled, _) = auto_scale(&embedded.physical, H_MAX, J_MAX)?;
    let programmed = match &setting.mask {
        Some(mask) => apply_spin_reversal(&scaled, mask)?,
        None => scaled,
    };
    let noisy = apply_bias_model(&programmed, ctx.bias);
    let config = AnnealConfig {
        seed: rng::derive_seed(seed, &[rng::tag("anneal")]),
        ..*ctx.anneal
    };
    let mut samples = sample(&noisy, &config, setting.offsets.as_ref(), ctx.hw)?;
    if let Some(mask) = &setting.mask {
        for read in &mut samples.reads {
            invert_spins(mask, &samples.variables, &mut read.spins)?;
        }
    }
    let breaks = chain_break_fraction(&samples, ctx.emb)?;
    let logical = unembed_majority_vote(&samples, ctx.emb, rng::derive_seed(seed, &[rng::tag("vote")]))?;

    let sense = problem.sense();
    let mut bins: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    let mut best: Option<(f64, f64)> = None;
    let mut total = 0.0;
    for read in &logical.reads {
        let energy = problem.energy(&read.spins);
        let score = bin_value(problem.score_from_energy(energy));
        total += score * read.num_occurrences as f64;
        bins.entry(score.to_bits()).or_insert((score, 0)).1 += read.num_occurrences;
        if best.is_none_or(|(b, _)| sense.better(score, b)) {
            best = Some((score, energy));
        }
    }
    let reads = logical.num_reads();
    let mut histogram: Vec<(f64, u64)> = bins.into_values().collect();
    histogram.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best_score, best_energy) = best.ok_or(Error::EmptyModel)?;
    Ok(RunOutcome {
        histogram,
        best_score,
        mean_score: total / reads as f64,
        best_energy,
        chain_break_fraction: breaks,
        qpu_time_us: samples.qpu_time_us,
        reads,
    })
}

/// Search space of one technique over a fixed embedding, with the mapping
/// from raw DE vectors to parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TechniqueSpace {
    pub technique: Technique,
    pub space: SearchSpace,
    layout: Layout,
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Qubits(Vec<QubitId>),
    Chains(usize),
    /// Chain index and the range of raw positions of its shares.
    Linear(Vec<(Var, usize, usize)>),
    Quadratic(Vec<((Var, Var), usize, usize)>),
}

impl TechniqueSpace {
    pub fn new(technique: Technique, hw: &HardwareGraph, emb: &Embedding, couplers: &EmbeddingCouplers) -> Self {
        let (lo, hi) = hw.offset_range(emb.qubits().first().copied().unwrap_or(0));
        let grid = DimSpec::Grid {
            lo,
            hi,
            step: hw.offset_step(),
        };
        let chains = emb.num_variables();
        let (dims, layout) = match technique {
            Technique::SrQ => {
                let q = emb.qubits();
                (alloc::vec![DimSpec::Binary; q.len()], Layout::Qubits(q))
            }
            Technique::SrC => (alloc::vec![DimSpec::Binary; chains], Layout::Chains(chains)),
            Technique::AoQ => {
                let q = emb.qubits();
                (alloc::vec![grid; q.len()], Layout::Qubits(q))
            }
            Technique::AoC => (alloc::vec![grid; chains], Layout::Chains(chains)),
            Technique::CwL => {
                let mut dims = Vec::new();
                let mut groups = Vec::new();
                for (v, chain) in emb.chains.iter().enumerate() {
                    if chain.len() > 1 {
                        let start = dims.len();
                        dims.extend(core::iter::repeat_n(DimSpec::Simplex { group: v as u32 }, chain.len()));
                        groups.push((v as Var, start, dims.len()));
                    }
                }
                (dims, Layout::Linear(groups))
            }
            Technique::CwQ => {
                let mut dims = Vec::new();
                let mut groups = Vec::new();
                for (g, (&e, set)) in couplers.inter.iter().filter(|(_, s)| s.len() > 1).enumerate() {
                    let start = dims.len();
                    dims.extend(core::iter::repeat_n(DimSpec::Simplex { group: g as u32 }, set.len()));
                    groups.push((e, start, dims.len()));
                }
                (dims, Layout::Quadratic(groups))
            }
        };
        Self {
            technique,
            space: SearchSpace { dims },
            layout,
        }
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn decode(
        &self,
        raw: &[f64],
        hw: &HardwareGraph,
        emb: &Embedding,
        couplers: &EmbeddingCouplers,
    ) -> Result<ParameterVector> {
        if raw.len() != self.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "{} raw values for a {}-dimensional space",
                raw.len(),
                self.len()
            )));
        }
        let grid = |x: f64, q: QubitId| {
            let (lo, hi) = hw.offset_range(q);
            decode_grid(x, lo, hi, hw.offset_step())
        };
        Ok(match (&self.layout, self.technique) {
            (Layout::Qubits(q), Technique::SrQ) => ParameterVector::SpinReversal(SpinReversalMask {
                level: Level::Qubit,
                bits: q.iter().zip(raw).map(|(&q, &x)| (q, decode_binary(x))).collect(),
            }),
            (Layout::Chains(_), Technique::SrC) => ParameterVector::SpinReversal(SpinReversalMask {
                level: Level::Chain,
                bits: raw.iter().enumerate().map(|(v, &x)| (v as Var, decode_binary(x))).collect(),
            }),
            (Layout::Qubits(q), Technique::AoQ) => {
                let values: BTreeMap<QubitId, f64> = q.iter().zip(raw).map(|(&q, &x)| (q, grid(x, q))).collect();
                ParameterVector::Offsets(snap_offsets(&values, hw))
            }
            (Layout::Chains(_), Technique::AoC) => {
                let values: Vec<f64> = emb.chains.iter().zip(raw).map(|(c, &x)| grid(x, c[0])).collect();
                ParameterVector::Offsets(expand_chain_offsets(&values, emb, hw)?)
            }
            (Layout::Linear(groups), _) => {
                let raw_linear = groups.iter().map(|&(v, a, b)| (v, raw[a..b].to_vec())).collect();
                ParameterVector::ChainWeights(ChainWeightDistribution::from_raw(
                    CwMode::Linear,
                    emb,
                    couplers,
                    &raw_linear,
                    &BTreeMap::new(),
                )?)
            }
            (Layout::Quadratic(groups), _) => {
                let raw_quadratic = groups.iter().map(|&(e, a, b)| (e, raw[a..b].to_vec())).collect();
                ParameterVector::ChainWeights(ChainWeightDistribution::from_raw(
                    CwMode::Quadratic,
                    emb,
                    couplers,
                    &BTreeMap::new(),
                    &raw_quadratic,
                )?)
            }
            _ => unreachable!("layout follows technique"),
        })
    }

    /// Raw vector of the default parameters: zero offsets, uniform shares,
    /// and for spin reversal a random mask flipping about half the
    /// variables.
    pub fn default_raw(&self, seed: u64) -> Vec<f64> {
        match &self.layout {
            Layout::Qubits(q) if self.technique == Technique::SrQ => {
                let mask = default_random_mask(Level::Qubit, q.iter().copied(), seed);
                mask.bits.values().map(|&b| encode_binary(b)).collect()
            }
            Layout::Chains(n) if self.technique == Technique::SrC => {
                let mask = default_random_mask(Level::Chain, 0..*n as u32, seed);
                mask.bits.values().map(|&b| encode_binary(b)).collect()
            }
            _ => self
                .space
                .dims
                .iter()
                .map(|d| match *d {
                    DimSpec::Grid { lo, hi, .. } => encode_grid(0.0, lo, hi),
                    DimSpec::Simplex { .. } => 0.5,
                    DimSpec::Binary => encode_binary(false),
                })
                .collect(),
        }
    }
}

/// Per-graph score fed to the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FitnessMode {
    #[default]
    Best,
    Mean,
}

/// Mean training score of a decoded parameter vector, signed so that lower
/// is better.
#[derive(Debug)]
pub struct TrainingObjective<'a> {
    pub problems: &'a [Problem],
    pub chain_strengths: &'a [f64],
    pub ctx: RunContext<'a>,
    pub space: &'a TechniqueSpace,
    pub mode: FitnessMode,
    pub seed: u64,
    /// Reuse the same sampling seeds for every candidate.
    pub common_random_numbers: bool,
}

impl<'a> TrainingObjective<'a> {
    pub fn score(&self, eval_id: u64, raw: &[f64]) -> Result<f64> {
        let params = self.space.decode(raw, self.ctx.hw, self.ctx.emb, self.ctx.couplers)?;
        let setting = Setting::from_parameters(&params, self.ctx.emb)?;
        self.score_setting(eval_id, &setting)
    }

    pub fn score_setting(&self, eval_id: u64, setting: &Setting) -> Result<f64> {
        let scores = (0..self.problems.len())
            .map(|g| self.graph_score(eval_id, g, setting))
            .collect::<Result<Vec<f64>>>()?;
        self.combine(&scores)
    }

    /// Score of training graph `g`, in the problem's own sense.
    pub fn graph_score(&self, eval_id: u64, g: usize, setting: &Setting) -> Result<f64> {
        let problem = self.problems.get(g).ok_or_else(|| Error::InvalidInput(alloc::format!("no training graph {g}")))?;
        let cs = *self
            .chain_strengths
            .get(g)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("no chain strength for graph {g}")))?;
        let id = if self.common_random_numbers { 0 } else { eval_id };
        let out = solve(problem, self.ctx, setting, cs, rng::derive_seed(self.seed, &[id, g as u64]))?;
        Ok(match self.mode {
            FitnessMode::Best => out.best_score,
            FitnessMode::Mean => out.mean_score,
        })
    }

    /// Mean of per-graph scores (in graph order), signed so lower is better.
    pub fn combine(&self, scores: &[f64]) -> Result<f64> {
        if self.problems.is_empty() || scores.len() != self.problems.len() {
            return Err(Error::InvalidInput("no training graphs".into()));
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        Ok(self.problems[0].sense().to_min() * mean)
    }
}

impl Fitness for TrainingObjective<'_> {
    fn evaluate(&self, eval_id: u64, raw: &[f64]) -> f64 {
        self.score(eval_id, raw).unwrap_or(f64::INFINITY)
    }
}

pub fn make_training_objective<'a>(
    problems: &'a [Problem],
    chain_strengths: &'a [f64],
    ctx: RunContext<'a>,
    space: &'a TechniqueSpace,
    seed: u64,
) -> TrainingObjective<'a> {
    TrainingObjective {
        problems,
        chain_strengths,
        ctx,
        space,
        mode: FitnessMode::Best,
        seed,
        common_random_numbers: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::clique_embedding;
    use crate::hwgraph::{build_chimera, ChimeraSpec};
    use crate::problems::{gen_random_graph, ProblemKind};
    use crate::sampler::BiasParams;

    struct Fixture {
        hw: HardwareGraph,
        emb: Embedding,
        couplers: EmbeddingCouplers,
        bias: BiasModel,
        anneal: AnnealConfig,
    }

    impl Fixture {
        fn new(l: u32, k: usize, bias: BiasParams) -> Self {
            let hw = build_chimera(ChimeraSpec::square(l)).unwrap();
            let emb = clique_embedding(&hw, k).unwrap();
            let couplers = emb.couplers(&hw);
            let bias = BiasModel::new(bias, &hw).unwrap();
            let anneal = AnnealConfig {
                num_reads: 20,
                sweeps: 100,
                ..AnnealConfig::default()
            };
            Self { hw, emb, couplers, bias, anneal }
        }

        fn ctx(&self) -> RunContext<'_> {
            RunContext {
                hw: &self.hw,
                emb: &self.emb,
                couplers: &self.couplers,
                bias: &self.bias,
                anneal: &self.anneal,
            }
        }
    }

    #[test]
    fn dimensions_per_technique() {
        let f = Fixture::new(3, 13, BiasParams::zero());
        let dims = |t| TechniqueSpace::new(t, &f.hw, &f.emb, &f.couplers).len();
        assert_eq!(dims(Technique::SrC), 13);
        assert_eq!(dims(Technique::AoC), 13);
        assert_eq!(dims(Technique::SrQ), f.emb.num_qubits());
        assert_eq!(dims(Technique::AoQ), f.emb.num_qubits());
        assert_eq!(dims(Technique::CwL), f.emb.num_qubits());
        let multi: usize = f.couplers.inter.values().filter(|s| s.len() > 1).map(Vec::len).sum();
        assert_eq!(dims(Technique::CwQ), multi);
    }

    #[test]
    fn default_raw_decodes_to_defaults() {
        let f = Fixture::new(3, 13, BiasParams::zero());
        for t in [Technique::AoQ, Technique::AoC, Technique::CwL, Technique::CwQ] {
            let space = TechniqueSpace::new(t, &f.hw, &f.emb, &f.couplers);
            let p = space.decode(&space.default_raw(1), &f.hw, &f.emb, &f.couplers).unwrap();
            match p {
                ParameterVector::Offsets(o) => assert!(o.is_zero()),
                ParameterVector::ChainWeights(cw) => {
                    let uniform = ChainWeightDistribution::uniform(cw.mode, &f.emb, &f.couplers);
                    for (a, b) in cw.linear_shares.iter().flatten().zip(uniform.linear_shares.iter().flatten()) {
                        assert!((a - b).abs() < 1e-12);
                    }
                }
                _ => panic!(),
            }
        }
        let sr = TechniqueSpace::new(Technique::SrC, &f.hw, &f.emb, &f.couplers);
        let ParameterVector::SpinReversal(mask) = sr.decode(&sr.default_raw(4), &f.hw, &f.emb, &f.couplers).unwrap()
        else {
            panic!()
        };
        assert_eq!(mask, default_random_mask(Level::Chain, 0..13, 4));
    }

    #[test]
    fn solve_is_deterministic_and_bounded() {
        let f = Fixture::new(3, 13, BiasParams::default());
        let g = gen_random_graph(13, 0.5, 2).unwrap();
        let p = Problem::new(ProblemKind::MaxClique, g.clone());
        let omega = crate::oracle::max_clique_exact(&g).unwrap().value as f64;
        let a = solve(&p, f.ctx(), &Setting::default(), 1.0, 9).unwrap();
        assert_eq!(a, solve(&p, f.ctx(), &Setting::default(), 1.0, 9).unwrap());
        assert!(a.best_score <= omega);
        assert!(a.best_score >= -13.0);
        assert_eq!(a.reads, 20);
        assert_eq!(a.histogram.iter().map(|h| h.1).sum::<u64>(), 20);
    }

    #[test]
    fn identity_mask_matches_default_run() {
        let f = Fixture::new(2, 9, BiasParams::zero());
        let g = gen_random_graph(9, 0.5, 3).unwrap();
        let p = Problem::new(ProblemKind::MaxCut, g);
        let identity = Setting {
            mask: Some(SpinReversalMask::identity(Level::Qubit, f.emb.qubits())),
            ..Setting::default()
        };
        assert_eq!(
            solve(&p, f.ctx(), &identity, 1.0, 5).unwrap(),
            solve(&p, f.ctx(), &Setting::default(), 1.0, 5).unwrap()
        );
    }

    #[test]
    fn objective_averages_graphs() {
        let f = Fixture::new(2, 9, BiasParams::zero());
        let problems: Vec<Problem> = (0..2)
            .map(|s| Problem::new(ProblemKind::MaxCut, gen_random_graph(9, 0.5, s).unwrap()))
            .collect();
        let cs = [1.0, 1.0];
        let space = TechniqueSpace::new(Technique::AoC, &f.hw, &f.emb, &f.couplers);
        let obj = make_training_objective(&problems, &cs, f.ctx(), &space, 11);
        let raw = space.default_raw(0);
        let per_graph: Vec<f64> = problems
            .iter()
            .enumerate()
            .map(|(g, p)| {
                let seed = rng::derive_seed(11, &[3, g as u64]);
                solve(p, f.ctx(), &Setting::default(), 1.0, seed).unwrap().best_score
            })
            .collect();
        let expect = -(per_graph[0] + per_graph[1]) / 2.0;
        // zero offsets decode to the default schedule
        let got = obj.score(3, &raw).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }
}
