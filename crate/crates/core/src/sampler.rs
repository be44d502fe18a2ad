//! Simulated-annealing stand-in for the annealer, with a hardware-bias
//! model and offset-aware per-qubit schedules.
//!
//! A read starts from random spins and performs `sweeps` Metropolis sweeps.
//! At sweep `t` qubit `q` sits at schedule progress
//! `s_q = clamp(t / sweeps + κ·o_q, 0, 1)` and inverse temperature
//! `β0·(β1/β0)^s_q`; once `s_q` reaches 1 it is frozen. A positive offset
//! therefore freezes a qubit early, a negative one keeps it moving longer.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hwgraph::{HardwareGraph, QubitId};
use crate::model::{Assignment, IsingModel, Model, Vartype};
use crate::rng;
use crate::transforms::{check_offsets, OffsetVector, H_MAX, J_MAX};

pub fn energy<T: Vartype>(model: &Model<T>, assignment: &Assignment) -> Result<f64> {
    model.energy(assignment)
}

/// Parameters of the injected imperfections of one virtual machine.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BiasParams {
    pub machine_seed: u64,
    pub sigma_h: f64,
    pub epsilon: f64,
    pub dac_bits: u32,
    pub kappa: f64,
}

impl Default for BiasParams {
    fn default() -> Self {
        Self {
            machine_seed: 0,
            sigma_h: 0.02,
            epsilon: 0.01,
            dac_bits: 8,
            kappa: 1.0,
        }
    }
}

impl BiasParams {
    /// No persistent bias, no leakage, double precision.
    pub fn zero() -> Self {
        Self {
            machine_seed: 0,
            sigma_h: 0.0,
            epsilon: 0.0,
            dac_bits: 53,
            kappa: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasModel {
    pub params: BiasParams,
    persistent_h: Vec<f64>,
}

impl BiasModel {
    /// Draws the persistent field offsets, one per qubit slot of `hw`.
    pub fn new(params: BiasParams, hw: &HardwareGraph) -> Result<Self> {
        if !(params.sigma_h >= 0.0 && params.epsilon >= 0.0 && params.kappa >= 0.0) || params.dac_bits == 0 {
            return Err(Error::Config("bias parameters must be nonnegative and dac_bits positive".into()));
        }
        let mut rng = rng::rng_from(params.machine_seed, &[rng::tag("machine")]);
        let normal = Normal::new(0.0, params.sigma_h).map_err(|e| Error::Config(alloc::format!("{e}")))?;
        let persistent_h = (0..hw.num_qubit_slots()).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self { params, persistent_h })
    }

    pub fn persistent_h(&self, q: QubitId) -> f64 {
        self.persistent_h.get(q as usize).copied().unwrap_or(0.0)
    }
}

/// Round to the nearest of `2^bits` evenly spaced levels spanning
/// `[lo, hi]`, clamping first.
pub fn quantize(x: f64, lo: f64, hi: f64, bits: u32) -> f64 {
    let levels = 2.0.powi(bits.min(60) as i32);
    let step = (hi - lo) / (levels - 1.0);
    let idx = ((x.clamp(lo, hi) - lo) / step).round();
    lo + idx * step
}

/// `h̃_i = Q(h_i + δh_i + ε Σ_j J_ij)`, `J̃_ij = Q(J_ij)`.
pub fn apply_bias_model(model: &IsingModel, bias: &BiasModel) -> IsingModel {
    let p = &bias.params;
    let mut leak: BTreeMap<QubitId, f64> = BTreeMap::new();
    for (&(a, b), &j) in model.quadratic_terms() {
        *leak.entry(a).or_insert(0.0) += j;
        *leak.entry(b).or_insert(0.0) += j;
    }
    let mut out = IsingModel::new();
    out.set_offset(model.offset());
    for (&q, &h) in model.linear_terms() {
        let raw = h + bias.persistent_h(q) + p.epsilon * leak.get(&q).copied().unwrap_or(0.0);
        out.set_linear(q, quantize(raw, -H_MAX, H_MAX, p.dac_bits));
    }
    for (&(a, b), &j) in model.quadratic_terms() {
        out.set_quadratic(a, b, quantize(j, -J_MAX, J_MAX, p.dac_bits)).expect("normalized edge");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnnealConfig {
    pub num_reads: u32,
    pub anneal_time_us: f64,
    pub sweeps: u32,
    pub beta_start: f64,
    pub beta_end: f64,
    pub overhead_us: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            num_reads: 1000,
            anneal_time_us: 1000.0,
            sweeps: 1000,
            beta_start: 0.1,
            beta_end: 10.0,
            overhead_us: 200.0,
            kappa: 1.0,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn qpu_time_us(&self) -> f64 {
        f64::from(self.num_reads) * (self.anneal_time_us + self.overhead_us)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Read {
    pub spins: Vec<i8>,
    pub energy: f64,
    pub num_occurrences: u64,
}

/// Distinct reads in order of first occurrence; `spins` follow `variables`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleSet {
    pub variables: Vec<QubitId>,
    pub reads: Vec<Read>,
    pub qpu_time_us: f64,
}

impl SampleSet {
    pub fn num_reads(&self) -> u64 {
        self.reads.iter().map(|r| r.num_occurrences).sum()
    }

    pub fn lowest(&self) -> Option<&Read> {
        self.reads.iter().min_by(|a, b| a.energy.total_cmp(&b.energy))
    }
}

/// Schedule progress of a qubit with offset `o` at sweep `t`.
pub fn schedule_progress(t: u32, sweeps: u32, kappa: f64, offset: f64) -> f64 {
    (f64::from(t) / f64::from(sweeps) + kappa * offset).clamp(0.0, 1.0)
}

/// First sweep at which the qubit is frozen: `⌈sweeps·(1 − κ·o)⌉`,
/// clamped to `1..=sweeps + 1` (`sweeps + 1` means never).
pub fn freeze_sweep(sweeps: u32, kappa: f64, offset: f64) -> u32 {
    let t = (f64::from(sweeps) * (1.0 - kappa * offset) - 1e-9).ceil();
    t.clamp(1.0, f64::from(sweeps) + 1.0) as u32
}

struct Schedule {
    freeze: u32,
    betas: Vec<f64>,
}

impl Schedule {
    fn new(config: &AnnealConfig, offset: f64) -> Self {
        let ratio = config.beta_end / config.beta_start;
        let betas = (1..=config.sweeps)
            .map(|t| {
                let s = schedule_progress(t, config.sweeps, config.kappa, offset);
                config.beta_start * ratio.powf(s)
            })
            .collect();
        Self {
            freeze: freeze_sweep(config.sweeps, config.kappa, offset),
            betas,
        }
    }
}

/// Anneal `model` `num_reads` times. Read `r` draws from the stream
/// `(seed, r)`, so reads are independent of each other.
pub fn sample(
    model: &IsingModel,
    config: &AnnealConfig,
    offsets: Option<&OffsetVector>,
    hw: &HardwareGraph,
) -> Result<SampleSet> {
    if model.num_variables() == 0 {
        return Err(Error::EmptyModel);
    }
    if config.num_reads == 0 || config.sweeps == 0 {
        return Err(Error::Config("num_reads and sweeps must be positive".into()));
    }
    if let Some(&q) = model.linear_terms().keys().find(|&&q| !hw.is_working(q)) {
        return Err(Error::UnknownQubit(q));
    }
    if let Some(o) = offsets {
        check_offsets(o, hw)?;
    }
    let m = model.compile();
    let n = m.len();

    // one schedule per distinct offset value
    let mut schedule_of = Vec::with_capacity(n);
    let mut schedules: Vec<(f64, Schedule)> = Vec::new();
    for &q in &m.variables {
        let o = offsets.map_or(0.0, |o| o.get(q));
        let idx = match schedules.iter().position(|(v, _)| *v == o) {
            Some(i) => i,
            None => {
                schedules.push((o, Schedule::new(config, o)));
                schedules.len() - 1
            }
        };
        schedule_of.push(idx);
    }

    let mut reads: Vec<Read> = Vec::new();
    let mut index: BTreeMap<Vec<i8>, usize> = BTreeMap::new();
    let mut spins = alloc::vec![0i8; n];
    let mut field = alloc::vec![0.0f64; n];
    for r in 0..config.num_reads {
        let mut rng = rng::rng_from(config.seed, &[u64::from(r)]);
        for s in spins.iter_mut() {
            *s = if rng.random_bool(0.5) { 1 } else { -1 };
        }
        for i in 0..n {
            field[i] = m.local_field(i, &spins);
        }
        for t in 1..=config.sweeps {
            for i in 0..n {
                let sched = &schedules[schedule_of[i]].1;
                if t >= sched.freeze {
                    continue;
                }
                let beta = sched.betas[(t - 1) as usize];
                let delta = -2.0 * f64::from(spins[i]) * field[i];
                if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                    spins[i] = -spins[i];
                    let ds = 2.0 * f64::from(spins[i]);
                    for &(j, w) in &m.adjacency[i] {
                        field[j] += w * ds;
                    }
                }
            }
        }
        match index.get(&spins) {
            Some(&k) => reads[k].num_occurrences += 1,
            None => {
                index.insert(spins.clone(), reads.len());
                reads.push(Read {
                    spins: spins.clone(),
                    energy: m.energy(&spins),
                    num_occurrences: 1,
                });
            }
        }
    }
    Ok(SampleSet {
        variables: m.variables.clone(),
        reads,
        qpu_time_us: config.qpu_time_us(),
    })
}
