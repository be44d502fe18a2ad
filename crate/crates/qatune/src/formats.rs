//! JSON artifacts written by the pipeline.

use std::path::Path;

use qatune_core::embedding::Embedding;
use qatune_core::metrics::{GraphOutcome, Report};
use qatune_core::optimizer::FitnessRecord;
use qatune_core::problems::ProblemGraph;
use qatune_core::transforms::{ParameterVector, Technique};
use qatune_core::tuning::RunOutcome;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Every artifact carries the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub kind: String,
    pub config_hash: String,
    pub data: T,
}

pub fn write_artifact<T: Serialize>(path: &Path, kind: &str, config_hash: &str, data: &T) -> Result<()> {
    io::write_json(
        path,
        &Artifact {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            data,
        },
    )
}

/// Reads an artifact and refuses it unless it matches `expected_hash`.
pub fn read_artifact<T: DeserializeOwned>(path: &Path, kind: &str, expected_hash: &str) -> Result<T> {
    let a: Artifact<T> = io::read_json(path)?;
    if a.kind != kind {
        return Err(Error::Config(format!("{} holds a {:?} artifact, expected {kind:?}", path.display(), a.kind)));
    }
    if a.config_hash != expected_hash {
        return Err(Error::HashMismatch {
            path: path.to_path_buf(),
            expected: expected_hash.to_string(),
            found: a.config_hash,
        });
    }
    Ok(a.data)
}

pub const GRAPH: &str = "graph";
pub const EMBEDDINGS: &str = "embeddings";
pub const SELECTION: &str = "selection";
pub const TRAINED: &str = "trained";
pub const RESULTS: &str = "results";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub split: Split,
    pub index: u32,
    pub seed: u64,
    pub graph: ProblemGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// The base clique embedding, the candidates for selection and the fixed
/// random variant behind the Default-RE baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub num_vertices: u32,
    pub base: Embedding,
    pub candidates: Vec<Embedding>,
    pub random: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate: usize,
    pub valid: bool,
    /// Mean over training graphs of the best read score.
    pub mean_best_score: Option<f64>,
    pub per_graph: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub winner: usize,
    pub embedding: Embedding,
    pub scores: Vec<CandidateScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub technique: Technique,
    pub dimensions: usize,
    pub parameters: ParameterVector,
    pub best_raw: Vec<f64>,
    pub best_fitness: Option<f64>,
    pub initial: Option<FitnessRecord>,
    pub history: Vec<FitnessRecord>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphResult {
    pub outcome: GraphOutcome,
    pub run: RunOutcome,
    pub chain_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResults {
    pub method: String,
    pub graphs: Vec<GraphResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    /// Configs of the runs the report was built from.
    pub config_hashes: Vec<String>,
    pub report: Report,
}
