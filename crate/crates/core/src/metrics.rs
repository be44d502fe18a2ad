//! Time-to-solution, improvement percentages and report tables.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::problems::{ProblemKind, Sense};
use crate::transforms::Technique;

pub const SUCCESS_PROBABILITY: f64 = 0.99;
pub const DEFAULT_OE: &str = "Default-OE";
pub const DEFAULT_RE: &str = "Default-RE";
/// Two objective values closer than this count as equal.
pub const VALUE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TargetKind {
    Optimal,
    BestKnown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveStats {
    pub t_qpu_us: f64,
    pub hits: u64,
    pub reads: u64,
    pub target_value: f64,
    pub target_kind: TargetKind,
}

/// `T · ln(1 − 0.99) / ln(1 − p)`, infinite when `p = 0` and `T` when
/// `p = 1`. The same formula gives TBS for best-known targets.
pub fn tts(stats: &SolveStats) -> Result<f64> {
    if stats.reads == 0 {
        return Err(Error::InvalidInput("no reads".into()));
    }
    if stats.hits > stats.reads {
        return Err(Error::InvalidInput("more hits than reads".into()));
    }
    let p = stats.hits as f64 / stats.reads as f64;
    Ok(tts_from_probability(stats.t_qpu_us, p))
}

pub fn tts_from_probability(t_qpu_us: f64, p: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else if p >= 1.0 {
        t_qpu_us
    } else {
        t_qpu_us * Float::ln(1.0 - SUCCESS_PROBABILITY) / Float::ln(1.0 - p)
    }
}

/// Relative gain over `reference` in percent, positive when better.
/// `None` when the reference is zero.
pub fn improvement_pct(reference: f64, achieved: f64, sense: Sense) -> Option<f64> {
    if reference == 0.0 {
        return None;
    }
    let gain = match sense {
        Sense::Maximize => achieved - reference,
        Sense::Minimize => reference - achieved,
    };
    Some(100.0 * gain / reference.abs())
}

/// Test-phase outcome of one method on one graph.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphOutcome {
    pub problem: ProblemKind,
    pub density: f64,
    pub method: String,
    pub graph: u32,
    /// Exact optimum when an oracle could compute it.
    pub optimum: Option<f64>,
    /// Score histogram over all reads, `(value, count)`.
    pub histogram: Vec<(f64, u64)>,
    pub reads: u64,
    pub t_qpu_us: f64,
}

impl GraphOutcome {
    pub fn best(&self) -> Option<f64> {
        self.problem.sense().best(self.histogram.iter().map(|&(v, _)| v))
    }

    pub fn hits(&self, target: f64) -> u64 {
        let sense = self.problem.sense();
        self.histogram
            .iter()
            .filter(|&&(v, _)| sense.better(v, target) || (v - target).abs() <= VALUE_TOLERANCE)
            .map(|&(_, c)| c)
            .sum()
    }
}

/// Column order: baselines, then the techniques, then anything else by
/// name.
pub fn method_rank(name: &str) -> (usize, String) {
    let rank = match name {
        DEFAULT_OE => 0,
        DEFAULT_RE => 1,
        _ => Technique::ALL
            .iter()
            .position(|t| t.label() == name)
            .map_or(usize::MAX, |i| i + 2),
    };
    (rank, String::from(name))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", rename_all = "snake_case"))]
pub enum Cell {
    NotRun,
    Evaluated {
        graphs: usize,
        solved_count: usize,
        /// Mean TTS (or TBS) over solved graphs.
        mean_tts_us: Option<f64>,
        mean_improvement_pct: Option<f64>,
        target_kind: TargetKind,
        bold: bool,
    },
}

impl Cell {
    pub fn solved_count(&self) -> usize {
        match self {
            Cell::Evaluated { solved_count, .. } => *solved_count,
            Cell::NotRun => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportRow {
    pub problem: ProblemKind,
    pub density: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Report {
    pub methods: Vec<String>,
    pub rows: Vec<ReportRow>,
}

type RowKey = (ProblemKind, u64);

fn row_key(o: &GraphOutcome) -> RowKey {
    (o.problem, o.density.to_bits())
}

/// Builds the table: one row per (problem, density), one column per
/// method. Targets are the oracle optimum when known and otherwise the
/// best value any method reached on that graph. Improvement is measured
/// against the Default-OE best value on the same graph.
pub fn aggregate(outcomes: &[GraphOutcome]) -> Result<Report> {
    let mut methods: Vec<String> = outcomes.iter().map(|o| o.method.clone()).collect();
    methods.sort_by_key(|m| method_rank(m));
    methods.dedup();

    let mut by_row: BTreeMap<RowKey, Vec<&GraphOutcome>> = BTreeMap::new();
    for o in outcomes {
        by_row.entry(row_key(o)).or_default().push(o);
    }

    let mut rows = Vec::new();
    for ((problem, density_bits), mut group) in by_row {
        group.sort_by_key(|o| (o.graph, method_rank(&o.method)));
        let sense = problem.sense();
        let mut targets: BTreeMap<u32, (f64, TargetKind)> = BTreeMap::new();
        let mut reference: BTreeMap<u32, f64> = BTreeMap::new();
        for o in &group {
            if let Some(opt) = o.optimum {
                targets.insert(o.graph, (opt, TargetKind::Optimal));
            }
            if o.method == DEFAULT_OE {
                if let Some(b) = o.best() {
                    reference.insert(o.graph, b);
                }
            }
        }
        for o in &group {
            let Some(best) = o.best() else { continue };
            let entry = targets.entry(o.graph).or_insert((best, TargetKind::BestKnown));
            if entry.1 == TargetKind::BestKnown && sense.better(best, entry.0) {
                entry.0 = best;
            }
        }

        let mut cells = Vec::with_capacity(methods.len());
        for m in &methods {
            let runs: Vec<&&GraphOutcome> = group.iter().filter(|o| &o.method == m).collect();
            if runs.is_empty() {
                cells.push(Cell::NotRun);
                continue;
            }
            let mut solved = Vec::new();
            let mut gains = Vec::new();
            let mut kind = TargetKind::Optimal;
            for o in &runs {
                let (target, k) = targets.get(&o.graph).copied().unwrap_or((f64::NAN, TargetKind::BestKnown));
                if k == TargetKind::BestKnown {
                    kind = TargetKind::BestKnown;
                }
                let stats = SolveStats {
                    t_qpu_us: o.t_qpu_us,
                    hits: o.hits(target),
                    reads: o.reads,
                    target_value: target,
                    target_kind: k,
                };
                let t = tts(&stats)?;
                if t.is_finite() {
                    solved.push(t);
                }
                if let (Some(r), Some(b)) = (reference.get(&o.graph), o.best()) {
                    if let Some(g) = improvement_pct(*r, b, sense) {
                        gains.push(g);
                    }
                }
            }
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            cells.push(Cell::Evaluated {
                graphs: runs.len(),
                solved_count: solved.len(),
                mean_tts_us: mean(&solved),
                mean_improvement_pct: mean(&gains),
                target_kind: kind,
                bold: false,
            });
        }
        mark_bold(&mut cells);
        rows.push(ReportRow {
            problem,
            density: f64::from_bits(density_bits),
            cells,
        });
    }
    Ok(Report { methods, rows })
}

/// Most solved graphs wins, ties go to the smaller mean TTS; at most one
/// bold cell per row and none when nothing was solved.
fn mark_bold(cells: &mut [Cell]) {
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        if let Cell::Evaluated {
            solved_count,
            mean_tts_us: Some(t),
            ..
        } = c
        {
            let better = match best {
                None => true,
                Some((_, s, bt)) => *solved_count > s || (*solved_count == s && *t < bt),
            };
            if *solved_count > 0 && better {
                best = Some((i, *solved_count, *t));
            }
        }
    }
    if let Some((i, _, _)) = best {
        if let Cell::Evaluated { bold, .. } = &mut cells[i] {
            *bold = true;
        }
    }
}

/// Rounds away float noise so equal scores land in one histogram bin.
pub fn bin_value(x: f64) -> f64 {
    Float::round(x * 1e6) / 1e6
}
