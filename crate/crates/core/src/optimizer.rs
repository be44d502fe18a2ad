//! Differential evolution over raw vectors in `[0, 1]^d`.
//!
//! Lower fitness is better. Candidates are identified by an evaluation id
//! `generation · population + member`, which callers use to derive their own
//! sampling seeds, so a run replays exactly whatever evaluator executes the
//! batch.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::transforms::{normalize_shares, snap_value};

/// One coordinate of a search space.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DimSpec {
    Binary,
    Grid { lo: f64, hi: f64, step: f64 },
    Simplex { group: u32 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSpace {
    pub dims: Vec<DimSpec>,
}

impl SearchSpace {
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }
}

pub fn decode_binary(x: f64) -> bool {
    x >= 0.5
}

/// Inverse of [`decode_binary`] at the cell centers.
pub fn encode_binary(bit: bool) -> f64 {
    if bit { 0.75 } else { 0.25 }
}

pub fn decode_grid(x: f64, lo: f64, hi: f64, step: f64) -> f64 {
    snap_value(lo + x.clamp(0.0, 1.0) * (hi - lo), (lo, hi), step)
}

pub fn encode_grid(value: f64, lo: f64, hi: f64) -> f64 {
    ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub fn decode_simplex(raw: &[f64]) -> Vec<f64> {
    normalize_shares(raw)
}

/// Base vector of the mutant; both use binomial crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Strategy {
    /// `best + F·(b − c)`.
    #[default]
    Best1Bin,
    /// `a + F·(b − c)`.
    Rand1Bin,
}

/// Differential weight. `Dither` redraws F uniformly once per generation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Mutation {
    Constant { f: f64 },
    Dither { lo: f64, hi: f64 },
}

/// `Immediate` lets later members of a generation see earlier replacements;
/// `Deferred` evaluates the whole generation as one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Updating {
    #[default]
    Immediate,
    Deferred,
}

impl Default for Mutation {
    fn default() -> Self {
        Mutation::Dither { lo: 0.5, hi: 1.0 }
    }
}

impl Mutation {
    fn is_valid(&self) -> bool {
        match *self {
            Mutation::Constant { f } => f > 0.0 && f <= 2.0,
            Mutation::Dither { lo, hi } => lo > 0.0 && lo <= hi && hi <= 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeConfig {
    pub population: usize,
    pub generations: usize,
    pub strategy: Strategy,
    pub mutation: Mutation,
    pub cr: f64,
    pub updating: Updating,
    pub elitism: bool,
    pub seeded_members: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 80,
            generations: 50,
            strategy: Strategy::Best1Bin,
            mutation: Mutation::default(),
            cr: 0.7,
            updating: Updating::Immediate,
            elitism: true,
            seeded_members: Vec::new(),
            seed: 0,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(alloc::format!(
                "population {} is below the minimum of 4",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::Config("generations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.cr) || !self.mutation.is_valid() {
            return Err(Error::Config(alloc::format!("bad mutation {:?} or CR={}", self.mutation, self.cr)));
        }
        if self.seeded_members.len() > self.population {
            return Err(Error::Config("more seeded members than population slots".into()));
        }
        Ok(())
    }

    pub fn max_evaluations(&self) -> usize {
        self.population * (self.generations + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitnessRecord {
    pub generation: usize,
    pub best_raw: Vec<f64>,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeResult {
    pub best_raw: Vec<f64>,
    pub best_fitness: f64,
    /// State after evaluating the initial population.
    pub initial: FitnessRecord,
    /// One record per generation.
    pub history: Vec<FitnessRecord>,
    pub evaluations: usize,
}

/// Objective over raw vectors; must be deterministic in `(eval_id, raw)`.
pub trait Fitness: Sync {
    fn evaluate(&self, eval_id: u64, raw: &[f64]) -> f64;
}

impl<F: Fn(u64, &[f64]) -> f64 + Sync> Fitness for F {
    fn evaluate(&self, eval_id: u64, raw: &[f64]) -> f64 {
        self(eval_id, raw)
    }
}

/// Runs a batch of candidates; results must line up with the batch.
pub trait Evaluator {
    fn evaluate_batch<F: Fitness + ?Sized>(&self, fitness: &F, batch: &[(u64, Vec<f64>)]) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Evaluator for Serial {
    fn evaluate_batch<F: Fitness + ?Sized>(&self, fitness: &F, batch: &[(u64, Vec<f64>)]) -> Vec<f64> {
        batch.iter().map(|(id, raw)| fitness.evaluate(*id, raw)).collect()
    }
}

fn sanitize(x: f64) -> f64 {
    if x.is_nan() { f64::INFINITY } else { x }
}

fn record(generation: usize, pop: &[Vec<f64>], fit: &[f64]) -> FitnessRecord {
    let best = argmin(fit);
    let finite: Vec<f64> = fit.iter().copied().filter(|x| x.is_finite()).collect();
    let mean = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    FitnessRecord {
        generation,
        best_raw: pop[best].clone(),
        best_fitness: fit[best],
        mean_fitness: mean,
    }
}

fn argmin(fit: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fit.iter().enumerate() {
        if f < fit[best] {
            best = i;
        }
    }
    best
}

fn mutate(pop: &[Vec<f64>], best: usize, i: usize, f: f64, config: &DeConfig, rng: &mut rng::Rng) -> Vec<f64> {
    let np = pop.len();
    let dims = pop[i].len();
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..np);
        if !taken.contains(&r) {
            break r;
        }
    };
    let a = match config.strategy {
        Strategy::Best1Bin => best,
        Strategy::Rand1Bin => pick(&[i]),
    };
    let b = pick(&[i, a]);
    let c = pick(&[i, a, b]);
    let forced = rng.random_range(0..dims);
    (0..dims)
        .map(|j| {
            if j == forced || rng.random::<f64>() < config.cr {
                (pop[a][j] + f * (pop[b][j] - pop[c][j])).clamp(0.0, 1.0)
            } else {
                pop[i][j]
            }
        })
        .collect()
}

fn select<F, E>(evaluator: &E, fitness: &F, trials: Vec<(usize, (u64, Vec<f64>))>, pop: &mut [Vec<f64>], fit: &mut [f64])
where
    F: Fitness + ?Sized,
    E: Evaluator,
{
    if trials.is_empty() {
        return;
    }
    let batch: Vec<(u64, Vec<f64>)> = trials.iter().map(|(_, t)| t.clone()).collect();
    let scores = evaluator.evaluate_batch(fitness, &batch);
    for ((i, (_, trial)), score) in trials.into_iter().zip(scores) {
        let score = sanitize(score);
        if score <= fit[i] {
            pop[i] = trial;
            fit[i] = score;
        }
    }
}

pub fn differential_evolution<F, E>(fitness: &F, dims: usize, config: &DeConfig, evaluator: &E) -> Result<DeResult>
where
    F: Fitness + ?Sized,
    E: Evaluator,
{
    config.validate()?;
    if dims == 0 {
        return Err(Error::Config("search space has no dimensions".into()));
    }
    if let Some(m) = config.seeded_members.iter().find(|m| m.len() != dims) {
        return Err(Error::Config(alloc::format!("seeded member has {} dims, expected {dims}", m.len())));
    }
    let np = config.population;
    let mut init_rng = rng::rng_from(config.seed, &[rng::tag("de-init")]);
    let mut pop: Vec<Vec<f64>> = config
        .seeded_members
        .iter()
        .map(|m| m.iter().map(|x| x.clamp(0.0, 1.0)).collect())
        .collect();
    while pop.len() < np {
        pop.push((0..dims).map(|_| init_rng.random::<f64>()).collect());
    }
    let batch: Vec<(u64, Vec<f64>)> = pop.iter().cloned().enumerate().map(|(i, x)| (i as u64, x)).collect();
    let mut fit: Vec<f64> = evaluator.evaluate_batch(fitness, &batch).into_iter().map(sanitize).collect();
    let mut evaluations = np;
    let initial = record(0, &pop, &fit);

    let mut history = Vec::with_capacity(config.generations);
    for generation in 1..=config.generations {
        let mut rng = rng::rng_from(config.seed, &[rng::tag("de-gen"), generation as u64]);
        let mut best = argmin(&fit);
        let elite = config.elitism.then_some(best);
        let f = match config.mutation {
            Mutation::Constant { f } => f,
            Mutation::Dither { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        };
        let mut pending: Vec<(usize, (u64, Vec<f64>))> = Vec::with_capacity(np);
        for i in 0..np {
            if Some(i) == elite {
                continue;
            }
            let trial = mutate(&pop, best, i, f, config, &mut rng);
            let candidate = (i, ((generation * np + i) as u64, trial));
            match config.updating {
                Updating::Immediate => {
                    evaluations += 1;
                    select(evaluator, fitness, alloc::vec![candidate], &mut pop, &mut fit);
                    if fit[i] < fit[best] {
                        best = i;
                    }
                }
                Updating::Deferred => pending.push(candidate),
            }
        }
        evaluations += pending.len();
        select(evaluator, fitness, pending, &mut pop, &mut fit);
        history.push(record(generation, &pop, &fit));
    }

    let best = argmin(&fit);
    Ok(DeResult {
        best_raw: pop[best].clone(),
        best_fitness: fit[best],
        initial,
        history,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::sync::atomic::{AtomicUsize, Ordering};

    // Raw coordinates span [-5.12, 5.12].
    fn sphere(_: u64, raw: &[f64]) -> f64 {
        raw.iter().map(|x| (10.24 * (x - 0.5)).powi(2)).sum()
    }

    #[test]
    fn sphere_converges() {
        let config = DeConfig {
            seed: 1,
            ..DeConfig::default()
        };
        let res = differential_evolution(&sphere, 10, &config, &Serial).unwrap();
        assert!(res.best_fitness <= 1e-2, "{}", res.best_fitness);
        assert_eq!(res.history.len(), 50);
        assert!(res.evaluations <= 80 * 51);
    }

    #[test]
    fn rand1bin_runs_and_is_monotone() {
        let config = DeConfig {
            population: 20,
            generations: 20,
            strategy: Strategy::Rand1Bin,
            mutation: Mutation::Constant { f: 0.8 },
            cr: 0.9,
            updating: Updating::Deferred,
            seed: 3,
            ..DeConfig::default()
        };
        let res = differential_evolution(&sphere, 4, &config, &Serial).unwrap();
        assert!(res.best_fitness < res.initial.best_fitness);
        assert!(res.history.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
    }

    #[test]
    fn constant_objective_is_flat() {
        let config = DeConfig {
            population: 8,
            generations: 5,
            ..DeConfig::default()
        };
        let res = differential_evolution(&|_: u64, _: &[f64]| 3.0, 4, &config, &Serial).unwrap();
        assert!(res.history.iter().all(|r| r.best_fitness == 3.0 && r.mean_fitness == 3.0));
    }

    #[test]
    fn seeded_optimum_is_kept() {
        let config = DeConfig {
            population: 10,
            generations: 10,
            seeded_members: alloc::vec![alloc::vec![0.5; 3]],
            ..DeConfig::default()
        };
        let res = differential_evolution(&sphere, 3, &config, &Serial).unwrap();
        assert_eq!(res.initial.best_fitness, 0.0);
        assert!(res.history.iter().all(|r| r.best_fitness == 0.0));
    }

    #[test]
    fn budget_and_determinism() {
        let calls = AtomicUsize::new(0);
        let counted = |id: u64, raw: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed);
            sphere(id, raw)
        };
        let config = DeConfig {
            population: 12,
            generations: 7,
            seed: 5,
            ..DeConfig::default()
        };
        let a = differential_evolution(&counted, 5, &config, &Serial).unwrap();
        assert_eq!(calls.load(Ordering::Relaxed), a.evaluations);
        assert!(a.evaluations <= config.max_evaluations());
        assert_eq!(a, differential_evolution(&sphere, 5, &config, &Serial).unwrap());
        let mut prev = a.initial.best_fitness;
        for r in &a.history {
            assert!(r.best_fitness <= prev);
            prev = r.best_fitness;
        }
    }

    #[test]
    fn small_population_rejected() {
        let config = DeConfig {
            population: 3,
            ..DeConfig::default()
        };
        assert!(matches!(differential_evolution(&sphere, 2, &config, &Serial), Err(Error::Config(_))));
    }

    #[test]
    fn decoders() {
        assert!(!decode_binary(0.49));
        assert!(decode_binary(0.5));
        assert!(decode_binary(encode_binary(true)));
        assert_eq!(decode_grid(0.5, -0.2, 0.2, 0.05), 0.0);
        assert_eq!(decode_grid(1.0, -0.2, 0.2, 0.05), 0.2);
        assert_eq!(decode_grid(encode_grid(0.1, -0.2, 0.2), -0.2, 0.2, 0.05), 0.1);
        let s = decode_simplex(&[0.2, 0.2, 0.6]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
