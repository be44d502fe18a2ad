//! Rayon-backed evaluation. Results are collected in input order, so runs
//! are identical for any thread count.

use qatune_core::optimizer::{Evaluator, Fitness};
use qatune_core::tuning::{Setting, TrainingObjective};
use rayon::prelude::*;

/// Evaluates a DE batch across the rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonEvaluator;

impl Evaluator for RayonEvaluator {
    fn evaluate_batch<F: Fitness + ?Sized>(&self, fitness: &F, batch: &[(u64, Vec<f64>)]) -> Vec<f64> {
        batch.par_iter().map(|(id, raw)| fitness.evaluate(*id, raw)).collect()
    }
}

/// Training objective that scores its graphs in parallel.
#[derive(Debug)]
pub struct ParallelObjective<'a>(pub TrainingObjective<'a>);

impl ParallelObjective<'_> {
    pub fn score_setting(&self, eval_id: u64, setting: &Setting) -> qatune_core::Result<f64> {
        let scores = (0..self.0.problems.len())
            .into_par_iter()
            .map(|g| self.0.graph_score(eval_id, g, setting))
            .collect::<qatune_core::Result<Vec<f64>>>()?;
        self.0.combine(&scores)
    }

    pub fn score(&self, eval_id: u64, raw: &[f64]) -> qatune_core::Result<f64> {
        let ctx = self.0.ctx;
        let params = self.0.space.decode(raw, ctx.hw, ctx.emb, ctx.couplers)?;
        self.score_setting(eval_id, &Setting::from_parameters(&params, ctx.emb)?)
    }
}

impl Fitness for ParallelObjective<'_> {
    fn evaluate(&self, eval_id: u64, raw: &[f64]) -> f64 {
        self.score(eval_id, raw).unwrap_or(f64::INFINITY)
    }
}
