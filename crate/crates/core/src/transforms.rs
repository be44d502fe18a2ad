//! Spin reversal, anneal offsets, chain weights and auto-scaling.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;

use rand::Rng as _;

use crate::embedding::{Embedding, EmbeddingCouplers};
use crate::error::{Error, Result};
use crate::hwgraph::{HardwareGraph, QubitId};
use crate::model::{Assignment, IsingModel, Var};
use crate::rng;

/// Whether a parameter addresses physical qubits or whole chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Level {
    Qubit,
    Chain,
}

/// Set `S` of reversed variables; a set bit means "flip".
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinReversalMask {
    pub level: Level,
    pub bits: BTreeMap<u32, bool>,
}

impl SpinReversalMask {
    pub fn identity(level: Level, variables: impl IntoIterator<Item = u32>) -> Self {
        Self {
            level,
            bits: variables.into_iter().map(|v| (v, false)).collect(),
        }
    }

    pub fn sign(&self, v: u32) -> Option<i8> {
        self.bits.get(&v).map(|&b| if b { -1 } else { 1 })
    }

    pub fn num_flipped(&self) -> usize {
        self.bits.values().filter(|&&b| b).count()
    }

    fn sign_of(&self, v: u32) -> Result<f64> {
        self.sign(v).map(f64::from).ok_or(Error::MissingVariable(v))
    }
}

/// `h'_i = s_i h_i`, `J'_ij = s_i s_j J_ij` with `s_i = -1` on flipped
/// variables. Only spin models can be reversed.
pub fn apply_spin_reversal(model: &IsingModel, mask: &SpinReversalMask) -> Result<IsingModel> {
    let mut out = model.clone();
    for (&v, h) in out.linear_mut() {
        *h *= mask.sign_of(v)?;
    }
    for (&(u, v), j) in out.quadratic_mut() {
        *j *= mask.sign_of(u)? * mask.sign_of(v)?;
    }
    Ok(out)
}

/// Maps a solution of the reversed model back to the original frame.
pub fn invert_solution(mask: &SpinReversalMask, assignment: &Assignment) -> Result<Assignment> {
    let mut out = assignment.clone();
    for (&v, &flip) in &mask.bits {
        let x = out.get_mut(&v).ok_or(Error::MissingVariable(v))?;
        if flip {
            *x = -*x;
        }
    }
    Ok(out)
}

/// Dense variant of [`invert_solution`] over `variables` (ascending).
pub fn invert_spins(mask: &SpinReversalMask, variables: &[u32], spins: &mut [i8]) -> Result<()> {
    for (v, s) in variables.iter().zip(spins.iter_mut()) {
        if mask.bits.get(v).copied().ok_or(Error::MissingVariable(*v))? {
            *s = -*s;
        }
    }
    Ok(())
}

/// Independent fair coin per variable.
pub fn default_random_mask(level: Level, variables: impl IntoIterator<Item = u32>, seed: u64) -> SpinReversalMask {
    let mut rng = rng::rng_from(seed, &[rng::tag("mask")]);
    SpinReversalMask {
        level,
        bits: variables.into_iter().map(|v| (v, rng.random_bool(0.5))).collect(),
    }
}

/// Copies each chain's bit onto all of its qubits.
pub fn expand_chain_mask(logical: &SpinReversalMask, emb: &Embedding) -> Result<SpinReversalMask> {
    let mut bits = BTreeMap::new();
    for (v, chain) in emb.chains.iter().enumerate() {
        let v = v as Var;
        let bit = logical.bits.get(&v).copied().ok_or(Error::MissingVariable(v))?;
        bits.extend(chain.iter().map(|&q| (q, bit)));
    }
    Ok(SpinReversalMask {
        level: Level::Qubit,
        bits,
    })
}

/// Per-qubit anneal offsets; missing qubits run the default schedule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OffsetVector {
    pub level: Level,
    pub offsets: BTreeMap<QubitId, f64>,
}

impl OffsetVector {
    pub fn zero(level: Level, qubits: impl IntoIterator<Item = QubitId>) -> Self {
        Self {
            level,
            offsets: qubits.into_iter().map(|q| (q, 0.0)).collect(),
        }
    }

    pub fn get(&self, q: QubitId) -> f64 {
        self.offsets.get(&q).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.offsets.values().all(|&o| o == 0.0)
    }
}

/// Clamp into `range`, then round to the nearest multiple of `step` lying
/// inside the range, ties toward zero.
pub fn snap_value(x: f64, range: (f64, f64), step: f64) -> f64 {
    let (lo, hi) = range;
    let x = if x.is_nan() { 0.0 } else { x.clamp(lo, hi) };
    let r = x / step;
    let mut k = r.signum() * Float::floor(r.abs() + 0.5 - 1e-9);
    let (kmin, kmax) = (Float::ceil(lo / step - 1e-9), Float::floor(hi / step + 1e-9));
    k = k.clamp(kmin, kmax);
    let v = Float::round(k * step * 1e12) / 1e12;
    if v == 0.0 { 0.0 } else { v }
}

pub fn snap_offsets(raw: &BTreeMap<QubitId, f64>, hw: &HardwareGraph) -> OffsetVector {
    OffsetVector {
        level: Level::Qubit,
        offsets: raw
            .iter()
            .map(|(&q, &x)| (q, snap_value(x, hw.offset_range(q), hw.offset_step())))
            .collect(),
    }
}

/// One offset per chain (indexed by variable), snapped against the
/// intersection of its qubits' ranges so the whole chain stays equal.
pub fn expand_chain_offsets(per_chain: &[f64], emb: &Embedding, hw: &HardwareGraph) -> Result<OffsetVector> {
    if per_chain.len() != emb.num_variables() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} chain offsets for {} chains",
            per_chain.len(),
            emb.num_variables()
        )));
    }
    let mut offsets = BTreeMap::new();
    for (chain, &x) in emb.chains.iter().zip(per_chain) {
        let range = chain
            .iter()
            .map(|&q| hw.offset_range(q))
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), (a, b)| (lo.max(a), hi.min(b)));
        let value = snap_value(x, range, hw.offset_step());
        offsets.extend(chain.iter().map(|&q| (q, value)));
    }
    Ok(OffsetVector {
        level: Level::Chain,
        offsets,
    })
}

/// Checks range and grid membership of every offset.
pub fn check_offsets(offsets: &OffsetVector, hw: &HardwareGraph) -> Result<()> {
    for (&q, &o) in &offsets.offsets {
        if !hw.is_working(q) {
            return Err(Error::UnknownQubit(q));
        }
        let (lo, hi) = hw.offset_range(q);
        let k = o / hw.offset_step();
        if o < lo - 1e-9 || o > hi + 1e-9 || (k - Float::round(k)).abs() > 1e-9 {
            return Err(Error::OffsetOutOfRange { qubit: q, value: o });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CwMode {
    #[cfg_attr(feature = "serde", serde(rename = "CW(L)"))]
    Linear,
    #[cfg_attr(feature = "serde", serde(rename = "CW(Q)"))]
    Quadratic,
}

/// How each logical bias is shared among its physical carriers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainWeightDistribution {
    pub mode: CwMode,
    /// Per variable, one share per chain qubit in chain order.
    pub linear_shares: Vec<Vec<f64>>,
    /// Per logical edge, one share per physical coupler between the chains.
    #[cfg_attr(feature = "serde", serde(with = "edge_map"))]
    pub quadratic_shares: BTreeMap<(Var, Var), Vec<f64>>,
}

/// Edge-keyed maps as `[[[u, v], value], ...]`, since JSON keys are strings.
#[cfg(feature = "serde")]
mod edge_map {
    use super::{BTreeMap, Var, Vec};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, V: Serialize>(map: &BTreeMap<(Var, Var), V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D, V>(d: D) -> Result<BTreeMap<(Var, Var), V>, D::Error>
    where
        D: Deserializer<'de>,
        V: Deserialize<'de>,
    {
        Ok(Vec::<((Var, Var), V)>::deserialize(d)?.into_iter().collect())
    }
}

pub const SHARE_FLOOR: f64 = 1e-6;

/// Clamp to at least [`SHARE_FLOOR`] and normalize to sum 1.
pub fn normalize_shares(raw: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = raw
        .iter()
        .map(|&x| if x.is_nan() { SHARE_FLOOR } else { x.max(SHARE_FLOOR) })
        .collect();
    let total: f64 = clamped.iter().sum();
    clamped.into_iter().map(|x| x / total).collect()
}

fn uniform(len: usize) -> Vec<f64> {
    alloc::vec![1.0 / len as f64; len]
}

impl ChainWeightDistribution {
    pub fn uniform(mode: CwMode, emb: &Embedding, couplers: &EmbeddingCouplers) -> Self {
        Self {
            mode,
            linear_shares: emb.chains.iter().map(|c| uniform(c.len())).collect(),
            quadratic_shares: couplers.inter.iter().map(|(&e, c)| (e, uniform(c.len()))).collect(),
        }
    }

    /// Replaces the shares of the tuned family from raw nonnegative
    /// vectors; groups absent from `raw` stay uniform.
    pub fn from_raw(
        mode: CwMode,
        emb: &Embedding,
        couplers: &EmbeddingCouplers,
        raw_linear: &BTreeMap<Var, Vec<f64>>,
        raw_quadratic: &BTreeMap<(Var, Var), Vec<f64>>,
    ) -> Result<Self> {
        let mut out = Self::uniform(mode, emb, couplers);
        match mode {
            CwMode::Linear => {
                for (&v, raw) in raw_linear {
                    let slot = out.linear_shares.get_mut(v as usize).ok_or(Error::MissingVariable(v))?;
                    if raw.len() != slot.len() {
                        return Err(Error::InvalidInput(alloc::format!("chain {v} has {} qubits", slot.len())));
                    }
                    *slot = normalize_shares(raw);
                }
            }
            CwMode::Quadratic => {
                for (&e, raw) in raw_quadratic {
                    let slot = out.quadratic_shares.get_mut(&e).ok_or(Error::Coverage(e.0, e.1))?;
                    if raw.len() != slot.len() {
                        return Err(Error::InvalidInput(alloc::format!("edge {e:?} has {} couplers", slot.len())));
                    }
                    *slot = normalize_shares(raw);
                }
            }
        }
        Ok(out)
    }

    /// Share vectors are nonnegative, sum to one and the untuned family
    /// is uniform.
    pub fn is_valid(&self) -> bool {
        let simplex = |s: &Vec<f64>| s.iter().all(|&x| x >= 0.0) && (s.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        let flat = |s: &Vec<f64>| s.iter().all(|&x| (x - 1.0 / s.len() as f64).abs() <= 1e-12);
        let lin = self.linear_shares.iter().all(simplex);
        let quad = self.quadratic_shares.values().all(simplex);
        let exclusive = match self.mode {
            CwMode::Linear => self.quadratic_shares.values().all(flat),
            CwMode::Quadratic => self.linear_shares.iter().all(flat),
        };
        lin && quad && exclusive
    }
}

pub const H_MAX: f64 = 2.0;
pub const J_MAX: f64 = 1.0;

/// Divide all biases by `max(max|h|/h_max, max|J|/j_max, 1)`.
pub fn auto_scale(model: &IsingModel, h_max: f64, j_max: f64) -> Result<(IsingModel, f64)> {
    if !(h_max > 0.0 && j_max > 0.0) {
        return Err(Error::InvalidInput("bias ranges must be positive".into()));
    }
    let (h, j) = model.max_abs_biases();
    let scale = (h / h_max).max(j / j_max).max(1.0);
    if scale == 1.0 {
        return Ok((model.clone(), 1.0));
    }
    Ok((model.scaled(1.0 / scale), scale))
}

/// The six tunable parameter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Technique {
    #[cfg_attr(feature = "serde", serde(rename = "SR(Q)"))]
    SrQ,
    #[cfg_attr(feature = "serde", serde(rename = "SR(C)"))]
    SrC,
    #[cfg_attr(feature = "serde", serde(rename = "AO(Q)"))]
    AoQ,
    #[cfg_attr(feature = "serde", serde(rename = "AO(C)"))]
    AoC,
    #[cfg_attr(feature = "serde", serde(rename = "CW(L)"))]
    CwL,
    #[cfg_attr(feature = "serde", serde(rename = "CW(Q)"))]
    CwQ,
}

impl Technique {
    pub const ALL: [Technique; 6] = [Self::SrQ, Self::SrC, Self::AoQ, Self::AoC, Self::CwL, Self::CwQ];

    /// Display label, e.g. `SR(Q)`.
    pub fn label(self) -> &'static str {
        match self {
            Self::SrQ => "SR(Q)",
            Self::SrC => "SR(C)",
            Self::AoQ => "AO(Q)",
            Self::AoC => "AO(C)",
            Self::CwL => "CW(L)",
            Self::CwQ => "CW(Q)",
        }
    }

    /// Command-line and file-name spelling, e.g. `SR_Q`.
    pub fn slug(self) -> &'static str {
        match self {
            Self::SrQ => "SR_Q",
            Self::SrC => "SR_C",
            Self::AoQ => "AO_Q",
            Self::AoC => "AO_C",
            Self::CwL => "CW_L",
            Self::CwQ => "CW_Q",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.slug() == s || t.label() == s)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("unknown technique {s:?}")))
    }
}

/// A concrete value of one tunable family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", content = "values", rename_all = "snake_case"))]
pub enum ParameterVector {
    SpinReversal(SpinReversalMask),
    Offsets(OffsetVector),
    ChainWeights(ChainWeightDistribution),
}
