//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qatune::config::{AnnealSettings, Counts, DeSettings};
use qatune::pipeline::{self, Pipeline};
use qatune::ExperimentConfig;
use qatune_core::embedding::{clique_embedding, embed_ising, random_embedding_variants, unembed_majority_vote, validate_embedding};
use qatune_core::hwgraph::{build_chimera, ChimeraSpec};
use qatune_core::metrics::{tts_from_probability, Cell, DEFAULT_OE, DEFAULT_RE};
use qatune_core::model::{Assignment, IsingModel};
use qatune_core::optimizer::{differential_evolution, DeConfig, Serial};
use qatune_core::oracle::{exact_ground_state, graph_partition_exact, max_clique_exact, max_cut_exact, GROUND_STATE_LIMIT};
use qatune_core::problems::{
    default_balance_penalty, evaluate_objective, gen_random_graph, graphpart_ising, maxclique_qubo, maxcut_ising, Objective,
    ProblemGraph, ProblemKind,
};
use qatune_core::rng::rng_from;
use qatune_core::sampler::{sample, AnnealConfig, BiasParams};
use qatune_core::transforms::{apply_spin_reversal, invert_solution, Level, SpinReversalMask};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_ising(n: u32, rng: &mut impl Rng) -> IsingModel {
    let mut m = IsingModel::new();
    for v in 0..n {
        m.add_linear(v, rng.random_range(-1.0..=1.0));
    }
    for u in 0..n {
        for v in u + 1..n {
            m.add_quadratic(u, v, rng.random_range(-1.0..=1.0)).unwrap();
        }
    }
    m
}

fn assignment(vars: &[u32], values: &[i8]) -> Assignment {
    vars.iter().copied().zip(values.iter().copied()).collect()
}

fn spin_reversal_invariance() -> Outcome {
    let mut rng = rng_from(1, &[]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let h = random_ising(n, &mut rng);
        let mask = SpinReversalMask {
            level: Level::Qubit,
            bits: (0..n).map(|v| (v, rng.random_bool(0.5))).collect(),
        };
        let hr = apply_spin_reversal(&h, &mask).unwrap();
        let g = exact_ground_state(&h, GROUND_STATE_LIMIT).unwrap();
        let gr = exact_ground_state(&hr, GROUND_STATE_LIMIT).unwrap();
        worst = worst.max((g.energy - gr.energy).abs());
        if (g.energy - gr.energy).abs() > 1e-12 {
            return outcome(false, format!("ground energies {} vs {}", g.energy, gr.energy));
        }
        for w in &gr.witnesses {
            let back = invert_solution(&mask, &assignment(&gr.variables, w)).unwrap();
            let e = h.energy(&back).unwrap();
            let values: Vec<i8> = back.values().copied().collect();
            if (e - g.energy).abs() > 1e-12 || !g.witnesses.contains(&values) {
                return outcome(false, format!("inverted minimizer has energy {e}, ground {}", g.energy));
            }
        }
    }
    outcome(true, format!("100 models, max energy gap {worst:.1e}"))
}

fn embedding_validity() -> Outcome {
    for l in [2u32, 3, 4, 16] {
        let hw = build_chimera(ChimeraSpec::square(l)).unwrap();
        let k = 4 * l as usize + 1;
        let kn = ProblemGraph::complete(k as u32);
        let emb = match clique_embedding(&hw, k) {
            Ok(e) => e,
            Err(e) => return outcome(false, format!("K_{k} on C{l}: {e}")),
        };
        if !validate_embedding(&hw, &kn, &emb).is_valid() {
            return outcome(false, format!("K_{k} on C{l} is invalid"));
        }
        let variants = random_embedding_variants(&hw, &emb, 30, u64::from(l));
        if variants.len() != 30 {
            return outcome(false, format!("{} variants on C{l}", variants.len()));
        }
        if let Some(i) = variants.iter().position(|v| !validate_embedding(&hw, &kn, v).is_valid()) {
            return outcome(false, format!("variant {i} of K_{k} on C{l} is invalid"));
        }
    }
    outcome(true, "K_9, K_13, K_17, K_65 plus 30 variants each")
}

fn spins_of_binary(x: &[i8]) -> Vec<i8> {
    x.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect()
}

fn formulation_correctness() -> Outcome {
    let mut checked = 0;
    for n in 6u32..=14 {
        for density in [0.25, 0.5, 0.75] {
            for i in 0..50u64 {
                let g = gen_random_graph(n, density, 1000 * u64::from(n) + i + (density * 1e6) as u64).unwrap();
                let omega = max_clique_exact(&g).unwrap().value;
                let cut = max_cut_exact(&g).unwrap().value;
                let bisection = graph_partition_exact(&g).unwrap().value;

                let q = exact_ground_state(&maxclique_qubo(&g), GROUND_STATE_LIMIT).unwrap();
                let ok_clique = (q.energy + omega as f64).abs() < 1e-9
                    && q.witnesses.iter().all(|w| {
                        evaluate_objective(ProblemKind::MaxClique, &g, &spins_of_binary(w)).unwrap()
                            == Objective::Clique { valid: true, size: omega }
                    });

                let c = exact_ground_state(&maxcut_ising(&g), GROUND_STATE_LIMIT).unwrap();
                let ok_cut = ((g.num_edges() as f64 - c.energy) / 2.0 - cut as f64).abs() < 1e-9
                    && c.witnesses
                        .iter()
                        .all(|w| evaluate_objective(ProblemKind::MaxCut, &g, w).unwrap() == Objective::Cut { size: cut });

                let p = exact_ground_state(&graphpart_ising(&g, default_balance_penalty(&g)).unwrap(), GROUND_STATE_LIMIT).unwrap();
                let ok_part = p.witnesses.iter().all(|w| {
                    evaluate_objective(ProblemKind::GraphPartitioning, &g, w).unwrap()
                        == Objective::Partition {
                            cut: bisection,
                            imbalance: n as usize % 2,
                        }
                });

                if !(ok_clique && ok_cut && ok_part) {
                    return outcome(
                        false,
                        format!("n={n} d={density} graph {i}: clique {ok_clique}, cut {ok_cut}, partition {ok_part}"),
                    );
                }
                checked += 1;
            }
        }
    }
    outcome(true, format!("{checked} graphs, three formulations each"))
}

fn sampler_soundness() -> Outcome {
    let hw = build_chimera(ChimeraSpec::new(1, 1, 4)).unwrap();
    let mut rng = rng_from(4, &[]);
    let mut found = 0;
    let mut qubits = 0;
    for i in 0..50u64 {
        let n = rng.random_range(3..=5);
        let logical = random_ising(n, &mut rng);
        let base = clique_embedding(&hw, n as usize).unwrap();
        let emb = random_embedding_variants(&hw, &base, 1, i).pop().unwrap();
        qubits = qubits.max(emb.num_qubits());
        let couplers = emb.couplers(&hw);
        let embedded = embed_ising(&logical, &emb, &couplers, 2.0, None).unwrap();
        let config = AnnealConfig {
            num_reads: 1000,
            sweeps: 2000,
            seed: i,
            ..AnnealConfig::default()
        };
        let samples = sample(&embedded.physical, &config, None, &hw).unwrap();
        let reads = unembed_majority_vote(&samples, &emb, i).unwrap();
        let ground = exact_ground_state(&logical, GROUND_STATE_LIMIT).unwrap();
        let best = reads
            .reads
            .iter()
            .map(|r| logical.energy_ordered(&r.spins))
            .fold(f64::INFINITY, f64::min);
        if best <= ground.energy + 1e-9 {
            found += 1;
        }
    }
    outcome(
        found * 100 >= 95 * 50,
        format!("ground state found on {found}/50 instances, at most {qubits} qubits"),
    )
}

fn tts_formula() -> Outcome {
    let identity = [1.0, 17.3, 1200.0, 2.5e6].iter().all(|&t| (tts_from_probability(t, 0.99) / t - 1.0).abs() <= 1e-12);
    let half = tts_from_probability(1.0, 0.5);
    let grid: Vec<f64> = (1..=99).map(|k| tts_from_probability(1000.0, f64::from(k) / 100.0)).collect();
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    outcome(
        identity && (half - 6.6439).abs() <= 1e-3 && decreasing,
        format!("tts(1, 0.5) = {half:.6}, identity {identity}, decreasing {decreasing}"),
    )
}

fn de_sanity() -> Outcome {
    let sphere = |_: u64, x: &[f64]| x.iter().map(|v| (10.24 * (v - 0.5)).powi(2)).sum::<f64>();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let config = DeConfig {
            population: 80,
            generations: 50,
            seed,
            ..DeConfig::default()
        };
        let r = differential_evolution(&sphere, 10, &config, &Serial).unwrap();
        let mut seq = vec![r.initial.best_fitness];
        seq.extend(r.history.iter().map(|h| h.best_fitness));
        if seq.windows(2).any(|w| w[1] > w[0]) {
            return outcome(false, format!("seed {seed}: best fitness increased"));
        }
        if r.evaluations > 80 * 51 {
            return outcome(false, format!("seed {seed}: {} evaluations", r.evaluations));
        }
        worst = worst.max(r.best_fitness);
    }
    outcome(worst <= 1e-2, format!("worst final sphere value {worst:.2e} over 5 runs"))
}

fn transfer_config(problem: ProblemKind, machine_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem,
        density: 0.5,
        bias: BiasParams {
            machine_seed,
            ..BiasParams::default()
        },
        counts: Counts {
            train_graphs: 5,
            test_graphs: 5,
            train_reads: 100,
            test_reads: 200,
            candidate_embeddings: 10,
        },
        anneal: AnnealSettings {
            sweeps: 20,
            ..AnnealSettings::default()
        },
        de: DeSettings {
            population: 16,
            generations: 10,
            ..DeSettings::default()
        },
        ..ExperimentConfig::default()
    }
}

fn end_to_end_transfer(root: &Path) -> Outcome {
    let start = Instant::now();
    let mut passed = true;
    let mut lines = Vec::new();
    for problem in [ProblemKind::MaxClique, ProblemKind::MaxCut, ProblemKind::GraphPartitioning] {
        let mut wins = 0;
        let mut per_seed = Vec::new();
        for ms in 0..5 {
            let out = root.join(format!("{problem}_m{ms}"));
            let p = Pipeline::new(transfer_config(problem, ms), &out).unwrap();
            p.run_all().unwrap();
            let report = pipeline::report(&out).unwrap().report;
            let best = report
                .methods
                .iter()
                .zip(&report.rows[0].cells)
                .filter(|(m, _)| *m != DEFAULT_OE && *m != DEFAULT_RE)
                .filter_map(|(m, c)| match c {
                    Cell::Evaluated {
                        mean_improvement_pct: Some(x),
                        ..
                    } => Some((*x, m.clone())),
                    _ => None,
                })
                .max_by(|a, b| a.0.total_cmp(&b.0));
            let (x, m) = best.unwrap_or((f64::NEG_INFINITY, "none".into()));
            if x > 0.0 {
                wins += 1;
            }
            per_seed.push(format!("{m} {x:+.2}"));
        }
        passed &= wins >= 4;
        lines.push(format!("{problem} {wins}/5 [{}]", per_seed.join(", ")));
    }
    let elapsed = start.elapsed();
    passed &= elapsed < Duration::from_secs(30 * 60);
    outcome(passed, lines.join("; "))
}

const TINY: &str = r#"{
  "problem": "graphpart",
  "num_vertices": 8,
  "counts": {"train_graphs": 2, "test_graphs": 2, "train_reads": 20, "test_reads": 40, "candidate_embeddings": 3},
  "anneal": {"sweeps": 20},
  "de": {"population": 5, "generations": 2},
  "seed": 11
}"#;

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn cli_steps(config: &Path, out: &Path, threads: &str) -> Result<(), String> {
    let common = ["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let steps: [&[&str]; 5] = [&["gen-graphs"], &["build-embedding"], &["select-embedding"], &["train"], &["test"]];
    for step in steps {
        let status = Command::new(env!("CARGO_BIN_EXE_qatune"))
            .args(step)
            .args(common)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("{step:?}: {}", String::from_utf8_lossy(&status.stderr)));
        }
    }
    let status = Command::new(env!("CARGO_BIN_EXE_qatune"))
        .args(["report", "--out", out.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok(())
}

fn determinism(root: &Path) -> Outcome {
    let config = root.join("tiny.json");
    std::fs::write(&config, TINY).unwrap();
    let (a, b) = (root.join("a"), root.join("b"));
    if let Err(e) = cli_steps(&config, &a, "1") {
        return outcome(false, e);
    }
    let first = snapshot(&a);
    if let Err(e) = cli_steps(&config, &a, "1").and_then(|()| cli_steps(&config, &b, "3")) {
        return outcome(false, e);
    }
    let rerun = snapshot(&a);
    let other = snapshot(&b);
    outcome(
        first == rerun && first == other && first.contains_key("report.csv"),
        format!("{} artifacts identical across reruns and thread counts", first.len()),
    )
}

fn main() -> ExitCode {
    // the libtest harness is off; ignore its flags and honor a name filter
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let root = tempfile::tempdir().unwrap();
    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 8] = [
        ("spin-reversal invariance", Box::new(spin_reversal_invariance)),
        ("embedding validity", Box::new(embedding_validity)),
        ("formulation correctness", Box::new(formulation_correctness)),
        ("sampler soundness", Box::new(sampler_soundness)),
        ("tts formula", Box::new(tts_formula)),
        ("differential evolution sanity", Box::new(de_sanity)),
        ("end-to-end transfer", Box::new(|| end_to_end_transfer(&root.path().join("transfer")))),
        ("determinism", Box::new(|| determinism(root.path()))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({}; {:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
