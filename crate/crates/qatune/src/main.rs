use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qatune::pipeline::{self, Method, Pipeline};
use qatune::{Error, ExperimentConfig, Result};
use qatune_core::problems::ProblemKind;
use qatune_core::transforms::Technique;
use serde_json::json;

/// Tune spin reversal, anneal offsets and chain weights on a fixed
/// embedding, against a simulated annealer.
#[derive(Debug, Parser)]
#[command(name = "qatune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the training and test graphs.
    GenGraphs(Common),
    /// Build the clique embedding and its random variants.
    BuildEmbedding(Common),
    /// Pick the best candidate embedding under default parameters.
    SelectEmbedding(Common),
    /// Train one technique, or every configured technique.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        technique: Option<Technique>,
    },
    /// Evaluate on the test graphs. `--technique default` runs both
    /// baselines; without the flag everything configured runs.
    Test {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        technique: Option<String>,
    },
    /// Aggregate all results under the output directory.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// All steps followed by the report.
    Run(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn pipeline(&self) -> Result<Pipeline> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.problem {
            config.problem = p;
        }
        if let Some(d) = self.density {
            config.density = d;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        Pipeline::new(config, &self.out)
    }
}

fn emit(value: serde_json::Value) {
    println!("{value}");
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGraphs(c) => {
            let p = c.pipeline()?;
            let files = p.gen_graphs()?;
            emit(json!({"command": "gen-graphs", "dir": display(&p.dir), "graphs": files.len(), "config_hash": p.hash}));
        }
        Command::BuildEmbedding(c) => {
            let p = c.pipeline()?;
            let set = p.build_embedding()?;
            emit(json!({
                "command": "build-embedding",
                "path": display(&p.embeddings_path()),
                "candidates": set.candidates.len(),
                "max_chain_length": set.base.max_chain_length(),
            }));
        }
        Command::SelectEmbedding(c) => {
            let p = c.pipeline()?;
            let s = p.select_embedding()?;
            emit(json!({"command": "select-embedding", "path": display(&p.selection_path()), "winner": s.winner}));
        }
        Command::Train { common, technique } => {
            let p = common.pipeline()?;
            let list = technique.map_or_else(|| p.config.techniques.clone(), |t| vec![t]);
            for t in list {
                let trained = p.train(t)?;
                emit(json!({
                    "command": "train",
                    "technique": t.slug(),
                    "path": display(&p.trained_path(t)),
                    "dimensions": trained.dimensions,
                    "best_fitness": trained.best_fitness,
                    "evaluations": trained.evaluations,
                }));
            }
        }
        Command::Test { common, technique } => {
            let p = common.pipeline()?;
            let methods = match technique.as_deref() {
                None => p.methods(),
                Some("default") => vec![Method::DefaultOe, Method::DefaultRe],
                Some(s) => vec![s.parse()?],
            };
            for m in methods {
                let r = p.test(m)?;
                emit(json!({"command": "test", "method": m.name(), "path": display(&p.results_path(m)), "graphs": r.graphs.len()}));
            }
        }
        Command::Report { out } => {
            let file = pipeline::report(&out)?;
            emit(json!({"command": "report", "dir": display(&out), "rows": file.report.rows.len()}));
        }
        Command::Run(c) => {
            let p = c.pipeline()?;
            p.run_all()?;
            let file = pipeline::report(&c.out)?;
            emit(json!({"command": "run", "dir": display(&p.dir), "rows": file.report.rows.len()}));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!("{}", json!({"error": "usage", "message": message.trim()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.code(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
