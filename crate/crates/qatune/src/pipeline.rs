//! The experiment steps: graphs, embeddings, selection, training, testing
//! and reporting. Each step reads the previous steps' artifacts from the
//! run directory `<out>/<problem>_d<density>/` and writes its own.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qatune_core::embedding::{clique_embedding, random_embedding_variants, validate_embedding, Embedding};
use qatune_core::hwgraph::HardwareGraph;
use qatune_core::metrics::{aggregate, Cell, GraphOutcome, TargetKind, DEFAULT_OE, DEFAULT_RE};
use qatune_core::optimizer::differential_evolution;
use qatune_core::oracle::{
    graph_partition_exact, max_clique_exact, max_cut_exact, CLIQUE_LIMIT, CUT_LIMIT, PARTITION_LIMIT,
};
use qatune_core::problems::{gen_random_graph, Problem, ProblemGraph, ProblemKind};
use qatune_core::rng::{derive_seed, tag};
use qatune_core::sampler::{AnnealConfig, BiasModel};
use qatune_core::transforms::Technique;
use qatune_core::tuning::{solve, RunContext, Setting, TechniqueSpace, TrainingObjective};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, RandomEmbedding};
use crate::error::{Error, Result};
use crate::formats::{
    read_artifact, write_artifact, Artifact, CandidateScore, EmbeddingSet, GraphFile, GraphResult, ReportFile,
    Selection, Split, TestResults, Trained, EMBEDDINGS, GRAPH, RESULTS, SELECTION, TRAINED,
};
use crate::io;
use crate::parallel::{ParallelObjective, RayonEvaluator};

/// A column of the report: one of the two baselines or a tuned technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DefaultOe,
    DefaultRe,
    Tuned(Technique),
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DefaultOe => DEFAULT_OE,
            Method::DefaultRe => DEFAULT_RE,
            Method::Tuned(t) => t.label(),
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            Method::DefaultOe => DEFAULT_OE,
            Method::DefaultRe => DEFAULT_RE,
            Method::Tuned(t) => t.slug(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default-oe" | "default_oe" => Ok(Method::DefaultOe),
            "default-re" | "default_re" => Ok(Method::DefaultRe),
            _ => Ok(Method::Tuned(s.parse()?)),
        }
    }
}

/// One problem/density run of the experiment.
#[derive(Debug)]
pub struct Pipeline {
    pub config: ExperimentConfig,
    pub hash: String,
    pub dir: PathBuf,
    hw: HardwareGraph,
    bias: BiasModel,
    n: u32,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, out: &Path) -> Result<Self> {
        config.validate()?;
        let hw = config.hardware.build()?;
        let bias = BiasModel::new(config.bias, &hw)?;
        let n = config.num_vertices(&hw)?;
        Ok(Self {
            hash: config.hash(),
            dir: out.join(config.run_name()),
            config,
            hw,
            bias,
            n,
        })
    }

    pub fn num_vertices(&self) -> u32 {
        self.n
    }

    fn seed(&self, path: &[u64]) -> u64 {
        derive_seed(self.config.seed, path)
    }

    fn chain_strength(&self) -> f64 {
        self.config.chain_strength().strength(self.n, self.config.density)
    }

    fn count(&self, split: Split) -> u32 {
        match split {
            Split::Train => self.config.counts.train_graphs,
            Split::Test => self.config.counts.test_graphs,
        }
    }

    pub fn graph_path(&self, split: Split, index: u32) -> PathBuf {
        self.dir.join("graphs").join(format!("{}_{index:03}.json", split.name()))
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.dir.join("embeddings.json")
    }

    pub fn selection_path(&self) -> PathBuf {
        self.dir.join("selection.json")
    }

    pub fn trained_path(&self, t: Technique) -> PathBuf {
        self.dir.join("trained").join(format!("{}.json", t.slug()))
    }

    pub fn results_path(&self, m: Method) -> PathBuf {
        self.dir.join("results").join(format!("{}.json", m.file_stem()))
    }

    pub fn gen_graphs(&self) -> Result<Vec<GraphFile>> {
        let mut files = Vec::new();
        for split in [Split::Train, Split::Test] {
            for index in 0..self.count(split) {
                let seed = self.seed(&[tag(split.name()), u64::from(index)]);
                let file = GraphFile {
                    split,
                    index,
                    seed,
                    graph: gen_random_graph(self.n, self.config.density, seed)?,
                };
                write_artifact(&self.graph_path(split, index), GRAPH, &self.hash, &file)?;
                files.push(file);
            }
        }
        Ok(files)
    }

    fn load_problems(&self, split: Split) -> Result<Vec<Problem>> {
        (0..self.count(split))
            .map(|i| {
                let file: GraphFile = read_artifact(&self.graph_path(split, i), GRAPH, &self.hash)?;
                Ok(Problem::new(self.config.problem, file.graph))
            })
            .collect()
    }

    pub fn build_embedding(&self) -> Result<EmbeddingSet> {
        let base = clique_embedding(&self.hw, self.n as usize)?;
        let report = validate_embedding(&self.hw, &ProblemGraph::complete(self.n), &base);
        if !report.is_valid() {
            return Err(qatune_core::Error::EmbeddingFailure(format!("{:?}", report.violations)).into());
        }
        let count = self.config.counts.candidate_embeddings as usize;
        let candidates = random_embedding_variants(&self.hw, &base, count, self.seed(&[tag("candidates")]));
        let random = random_embedding_variants(&self.hw, &base, 1, self.seed(&[tag("default-re")])).remove(0);
        let set = EmbeddingSet {
            num_vertices: self.n,
            base,
            candidates,
            random,
        };
        write_artifact(&self.embeddings_path(), EMBEDDINGS, &self.hash, &set)?;
        Ok(set)
    }

    fn context<'a>(
        &'a self,
        emb: &'a Embedding,
        couplers: &'a qatune_core::embedding::EmbeddingCouplers,
        anneal: &'a AnnealConfig,
    ) -> RunContext<'a> {
        RunContext {
            hw: &self.hw,
            emb,
            couplers,
            bias: &self.bias,
            anneal,
        }
    }

    /// Scores every candidate with default parameters on the training
    /// graphs (sampling seeds shared across candidates) and keeps the best
    /// mean; ties go to the lower index.
    pub fn select_embedding(&self) -> Result<Selection> {
        let set: EmbeddingSet = read_artifact(&self.embeddings_path(), EMBEDDINGS, &self.hash)?;
        let problems = self.load_problems(Split::Train)?;
        let anneal = self.config.anneal_config(self.config.counts.train_reads);
        let complete = ProblemGraph::complete(self.n);
        let cs = self.chain_strength();
        let scores = set
            .candidates
            .par_iter()
            .enumerate()
            .map(|(c, emb)| {
                if !validate_embedding(&self.hw, &complete, emb).is_valid() {
                    return Ok(CandidateScore {
                        candidate: c,
                        valid: false,
                        mean_best_score: None,
                        per_graph: Vec::new(),
                    });
                }
                let couplers = emb.couplers(&self.hw);
                let ctx = self.context(emb, &couplers, &anneal);
                let per_graph = problems
                    .par_iter()
                    .enumerate()
                    .map(|(g, p)| {
                        let seed = self.seed(&[tag("select"), g as u64]);
                        Ok(solve(p, ctx, &Setting::default(), cs, seed)?.best_score)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(CandidateScore {
                    candidate: c,
                    valid: true,
                    mean_best_score: Some(per_graph.iter().sum::<f64>() / per_graph.len() as f64),
                    per_graph,
                })
            })
            .collect::<Result<Vec<CandidateScore>>>()?;
        let sense = self.config.problem.sense();
        let mut winner: Option<(usize, f64)> = None;
        for s in &scores {
            if let Some(v) = s.mean_best_score {
                if winner.is_none_or(|(_, w)| sense.better(v, w)) {
                    winner = Some((s.candidate, v));
                }
            }
        }
        let (winner, _) = winner
            .ok_or_else(|| qatune_core::Error::EmbeddingFailure("no candidate embedding is valid".into()))?;
        let selection = Selection {
            winner,
            embedding: set.candidates[winner].clone(),
            scores,
        };
        write_artifact(&self.selection_path(), SELECTION, &self.hash, &selection)?;
        Ok(selection)
    }

    pub fn train(&self, technique: Technique) -> Result<Trained> {
        let selection: Selection = read_artifact(&self.selection_path(), SELECTION, &self.hash)?;
        let problems = self.load_problems(Split::Train)?;
        let emb = &selection.embedding;
        let couplers = emb.couplers(&self.hw);
        let anneal = self.config.anneal_config(self.config.counts.train_reads);
        let ctx = self.context(emb, &couplers, &anneal);
        let space = TechniqueSpace::new(technique, &self.hw, emb, &couplers);
        let trained = if space.is_empty() {
            Trained {
                technique,
                dimensions: 0,
                parameters: space.decode(&[], &self.hw, emb, &couplers)?,
                best_raw: Vec::new(),
                best_fitness: None,
                initial: None,
                history: Vec::new(),
                evaluations: 0,
            }
        } else {
            let strengths = vec![self.chain_strength(); problems.len()];
            let objective = ParallelObjective(TrainingObjective {
                problems: &problems,
                chain_strengths: &strengths,
                ctx,
                space: &space,
                mode: self.config.fitness,
                seed: self.seed(&[tag("train")]),
                common_random_numbers: self.config.common_random_numbers,
            });
            let seeded = vec![space.default_raw(self.seed(&[tag("default-mask")]))];
            let de = self.config.de.to_config(self.seed(&[tag("de"), tag(technique.slug())]), seeded);
            let result = differential_evolution(&objective, space.len(), &de, &RayonEvaluator)?;
            Trained {
                technique,
                dimensions: space.len(),
                parameters: space.decode(&result.best_raw, &self.hw, emb, &couplers)?,
                best_raw: result.best_raw,
                best_fitness: Some(result.best_fitness),
                initial: Some(result.initial),
                history: result.history,
                evaluations: result.evaluations,
            }
        };
        write_artifact(&self.trained_path(technique), TRAINED, &self.hash, &trained)?;
        Ok(trained)
    }

    /// Runs `method` on every test graph with the same per-graph sampling
    /// seeds for all methods.
    pub fn test(&self, method: Method) -> Result<TestResults> {
        let problems = self.load_problems(Split::Test)?;
        let (emb, setting) = match method {
            Method::DefaultOe => {
                let s: Selection = read_artifact(&self.selection_path(), SELECTION, &self.hash)?;
                (s.embedding, Setting::default())
            }
            Method::DefaultRe => {
                let set: EmbeddingSet = read_artifact(&self.embeddings_path(), EMBEDDINGS, &self.hash)?;
                (set.random, Setting::default())
            }
            Method::Tuned(t) => {
                let s: Selection = read_artifact(&self.selection_path(), SELECTION, &self.hash)?;
                let trained: Trained = read_artifact(&self.trained_path(t), TRAINED, &self.hash)?;
                let setting = Setting::from_parameters(&trained.parameters, &s.embedding)?;
                (s.embedding, setting)
            }
        };
        let embeddings: Vec<Embedding> = match (method, self.config.random_embedding) {
            (Method::DefaultRe, RandomEmbedding::PerGraph) => {
                let set: EmbeddingSet = read_artifact(&self.embeddings_path(), EMBEDDINGS, &self.hash)?;
                (0..problems.len() as u64)
                    .map(|g| random_embedding_variants(&self.hw, &set.base, 1, self.seed(&[tag("default-re"), g])).remove(0))
                    .collect()
            }
            _ => vec![emb; problems.len()],
        };
        let anneal = self.config.anneal_config(self.config.counts.test_reads);
        let cs = self.chain_strength();
        let graphs = problems
            .par_iter()
            .zip(&embeddings)
            .enumerate()
            .map(|(g, (p, emb))| {
                let couplers = emb.couplers(&self.hw);
                let ctx = self.context(emb, &couplers, &anneal);
                let run = solve(p, ctx, &setting, cs, self.seed(&[tag("test"), g as u64]))?;
                let outcome = GraphOutcome {
                    problem: p.kind,
                    density: self.config.density,
                    method: method.name().to_string(),
                    graph: g as u32,
                    optimum: oracle_optimum(p)?,
                    histogram: run.histogram.clone(),
                    reads: run.reads,
                    t_qpu_us: run.qpu_time_us,
                };
                Ok(GraphResult {
                    outcome,
                    run,
                    chain_strength: cs,
                })
            })
            .collect::<Result<Vec<GraphResult>>>()?;
        let results = TestResults {
            method: method.name().to_string(),
            graphs,
        };
        write_artifact(&self.results_path(method), RESULTS, &self.hash, &results)?;
        Ok(results)
    }

    /// Baselines followed by the configured techniques.
    pub fn methods(&self) -> Vec<Method> {
        let mut m = vec![Method::DefaultOe, Method::DefaultRe];
        m.extend(self.config.techniques.iter().map(|&t| Method::Tuned(t)));
        m
    }

    /// Every step in order, then the report over `out`.
    pub fn run_all(&self) -> Result<()> {
        self.gen_graphs()?;
        self.build_embedding()?;
        self.select_embedding()?;
        for &t in &self.config.techniques {
            self.train(t)?;
        }
        for m in self.methods() {
            self.test(m)?;
        }
        Ok(())
    }
}

/// Score of the exact optimum when the graph is small enough for the
/// oracles.
pub fn oracle_optimum(problem: &Problem) -> Result<Option<f64>> {
    let g = &problem.graph;
    let n = g.n as usize;
    Ok(match problem.kind {
        ProblemKind::MaxClique if n <= CLIQUE_LIMIT => Some(max_clique_exact(g)?.value as f64),
        ProblemKind::MaxCut if n <= CUT_LIMIT => Some(max_cut_exact(g)?.value as f64),
        ProblemKind::GraphPartitioning if n <= PARTITION_LIMIT => {
            Some(graph_partition_exact(g)?.value as f64 + problem.balance_penalty * (n % 2) as f64)
        }
        _ => None,
    })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(source) => return Err(Error::Io { path: dir.to_path_buf(), source }),
    };
    for e in entries {
        out.push(e.map_err(|source| Error::Io { path: dir.to_path_buf(), source })?.path());
    }
    out.sort();
    Ok(out)
}

/// Collects every `results/*.json` under the run directories of `out`.
pub fn collect_results(out: &Path) -> Result<(Vec<GraphOutcome>, Vec<String>)> {
    let mut outcomes = Vec::new();
    let mut hashes = BTreeSet::new();
    for run in sorted_entries(out)?.into_iter().filter(|p| p.is_dir()) {
        for path in sorted_entries(&run.join("results"))? {
            if path.extension().is_some_and(|e| e == "json") {
                let a: Artifact<TestResults> = io::read_json(&path)?;
                if a.kind != RESULTS {
                    continue;
                }
                hashes.insert(a.config_hash);
                outcomes.extend(a.data.graphs.into_iter().map(|g| g.outcome));
            }
        }
    }
    Ok((outcomes, hashes.into_iter().collect()))
}

pub const CSV_HEADER: [&str; 9] = [
    "problem",
    "density",
    "technique",
    "mean_tts_us",
    "solved_count",
    "improvement_pct",
    "graphs",
    "target",
    "bold",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn report_csv(file: &ReportFile) -> Result<Vec<u8>> {
    let csv_err = |source| Error::Csv {
        path: PathBuf::from("report.csv"),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in &file.report.rows {
        for (method, cell) in file.report.methods.iter().zip(&row.cells) {
            if let Cell::Evaluated {
                graphs,
                solved_count,
                mean_tts_us,
                mean_improvement_pct,
                target_kind,
                bold,
            } = cell
            {
                let target = match target_kind {
                    TargetKind::Optimal => "tts",
                    TargetKind::BestKnown => "tbs",
                };
                w.write_record([
                    row.problem.to_string(),
                    row.density.to_string(),
                    method.clone(),
                    opt(*mean_tts_us),
                    solved_count.to_string(),
                    opt(*mean_improvement_pct),
                    graphs.to_string(),
                    target.to_string(),
                    bold.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

/// Aggregates all results under `out` into `report.json` and `report.csv`.
pub fn report(out: &Path) -> Result<ReportFile> {
    let (outcomes, config_hashes) = collect_results(out)?;
    let file = ReportFile {
        config_hashes,
        report: aggregate(&outcomes)?,
    };
    io::write_json(&out.join("report.json"), &file)?;
    io::write_atomic(&out.join("report.csv"), &report_csv(&file)?)?;
    Ok(file)
}
