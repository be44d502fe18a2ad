//! Experiment configuration and its content hash.

use qatune_core::embedding::clique_capacity;
use qatune_core::hwgraph::{build_chimera, ChimeraSpec, HardwareGraph, QubitId, DEFAULT_OFFSET_RANGE, DEFAULT_OFFSET_STEP};
use qatune_core::optimizer::{DeConfig, Mutation, Strategy, Updating};
use qatune_core::problems::ProblemKind;
use qatune_core::sampler::{AnnealConfig, BiasParams};
use qatune_core::transforms::Technique;
use qatune_core::tuning::FitnessMode;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub density: f64,
    /// Vertices per graph; the clique capacity of the hardware when absent.
    pub num_vertices: Option<u32>,
    pub hardware: HardwareConfig,
    pub bias: BiasParams,
    pub counts: Counts,
    pub anneal: AnnealSettings,
    /// Per-problem default when absent.
    pub chain_strength: Option<ChainStrengthRule>,
    pub random_embedding: RandomEmbedding,
    #[serde(deserialize_with = "techniques")]
    pub techniques: Vec<Technique>,
    pub de: DeSettings,
    pub fitness: FitnessMode,
    pub common_random_numbers: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::MaxClique,
            density: 0.5,
            num_vertices: None,
            hardware: HardwareConfig::default(),
            bias: BiasParams::default(),
            counts: Counts::default(),
            anneal: AnnealSettings::default(),
            chain_strength: None,
            random_embedding: RandomEmbedding::Fixed,
            techniques: Technique::ALL.to_vec(),
            de: DeSettings::default(),
            fitness: FitnessMode::Best,
            common_random_numbers: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    pub rows: u32,
    pub cols: u32,
    pub shore: u32,
    pub dead_qubits: Vec<QubitId>,
    pub offset_range: (f64, f64),
    pub offset_step: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            shore: 4,
            dead_qubits: Vec::new(),
            offset_range: DEFAULT_OFFSET_RANGE,
            offset_step: DEFAULT_OFFSET_STEP,
        }
    }
}

impl HardwareConfig {
    pub fn build(&self) -> Result<HardwareGraph> {
        let hw = build_chimera(ChimeraSpec::new(self.rows, self.cols, self.shore))?;
        let hw = if self.dead_qubits.is_empty() { hw } else { hw.remove_qubits(&self.dead_qubits)? };
        Ok(hw.with_offset_limits(self.offset_range, self.offset_step)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub train_graphs: u32,
    pub test_graphs: u32,
    pub train_reads: u32,
    pub test_reads: u32,
    pub candidate_embeddings: u32,
}

impl Default for Counts {
    fn default() -> Self {
        Self {
            train_graphs: 10,
            test_graphs: 10,
            train_reads: 1000,
            test_reads: 10000,
            candidate_embeddings: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSettings {
    pub anneal_time_us: f64,
    pub sweeps: u32,
    pub beta_start: f64,
    pub beta_end: f64,
    pub overhead_us: f64,
}

impl Default for AnnealSettings {
    fn default() -> Self {
        let a = AnnealConfig::default();
        Self {
            anneal_time_us: a.anneal_time_us,
            sweeps: a.sweeps,
            beta_start: a.beta_start,
            beta_end: a.beta_end,
            overhead_us: a.overhead_us,
        }
    }
}

/// Chain strength per graph. `DensityScaled` gives `prefactor·a·b·d` with
/// `a = ⌊n/2⌋`, `b = ⌈n/2⌉` unless set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainStrengthRule {
    Constant { value: f64 },
    DensityScaled { prefactor: f64, a: Option<u32>, b: Option<u32> },
}

impl ChainStrengthRule {
    pub fn for_problem(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::MaxClique | ProblemKind::MaxCut => Self::Constant { value: 1.0 },
            ProblemKind::GraphPartitioning => Self::DensityScaled {
                prefactor: 20.0,
                a: None,
                b: None,
            },
        }
    }

    pub fn strength(&self, n: u32, density: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::DensityScaled { prefactor, a, b } => {
                let a = a.unwrap_or(n / 2);
                let b = b.unwrap_or(n.div_ceil(2));
                prefactor * f64::from(a) * f64::from(b) * density
            }
        }
    }
}

/// Default-RE baseline: one random variant for all test graphs, or a
/// fresh one per graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomEmbedding {
    #[default]
    Fixed,
    PerGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeSettings {
    pub population: usize,
    pub generations: usize,
    pub strategy: Strategy,
    pub mutation: Mutation,
    pub cr: f64,
    pub updating: Updating,
    pub elitism: bool,
}

impl Default for DeSettings {
    fn default() -> Self {
        let d = DeConfig::default();
        Self {
            population: d.population,
            generations: d.generations,
            strategy: d.strategy,
            mutation: d.mutation,
            cr: d.cr,
            updating: d.updating,
            elitism: d.elitism,
        }
    }
}

impl DeSettings {
    pub fn to_config(self, seed: u64, seeded_members: Vec<Vec<f64>>) -> DeConfig {
        DeConfig {
            population: self.population,
            generations: self.generations,
            strategy: self.strategy,
            mutation: self.mutation,
            cr: self.cr,
            updating: self.updating,
            elitism: self.elitism,
            seeded_members,
            seed,
        }
    }
}

fn techniques<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Technique>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.counts;
        if [c.train_graphs, c.test_graphs, c.train_reads, c.test_reads, c.candidate_embeddings].contains(&0) {
            return Err(Error::Config("all counts must be at least 1".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!("density {} is outside (0, 1]", self.density)));
        }
        if self.anneal.sweeps == 0 || !(self.anneal.anneal_time_us > 0.0) {
            return Err(Error::Config("sweeps and anneal time must be positive".into()));
        }
        if !(self.chain_strength().strength(self.num_vertices.unwrap_or(2), self.density) > 0.0) {
            return Err(Error::Config("chain strength must be positive".into()));
        }
        self.de.to_config(0, Vec::new()).validate()?;
        Ok(())
    }

    pub fn chain_strength(&self) -> ChainStrengthRule {
        self.chain_strength.unwrap_or_else(|| ChainStrengthRule::for_problem(self.problem))
    }

    /// Graph order on `hw`: the configured size, or the clique capacity.
    pub fn num_vertices(&self, hw: &HardwareGraph) -> Result<u32> {
        let cap = clique_capacity(hw) as u32;
        match self.num_vertices {
            Some(n) if n == 0 || n > cap => Err(Error::Config(format!("{n} vertices do not fit a clique capacity of {cap}"))),
            Some(n) => Ok(n),
            None => Ok(cap),
        }
    }

    pub fn anneal_config(&self, num_reads: u32) -> AnnealConfig {
        AnnealConfig {
            num_reads,
            anneal_time_us: self.anneal.anneal_time_us,
            sweeps: self.anneal.sweeps,
            beta_start: self.anneal.beta_start,
            beta_end: self.anneal.beta_end,
            overhead_us: self.anneal.overhead_us,
            kappa: self.bias.kappa,
            seed: 0,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Directory name for this problem and density inside an output root.
    pub fn run_name(&self) -> String {
        format!("{}_d{}", self.problem, self.density)
    }
}
