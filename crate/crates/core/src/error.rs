use alloc::string::String;

use crate::hwgraph::QubitId;
use crate::model::Var;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid chimera spec: {0}")]
    InvalidSpec(String),
    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),
    #[error("complete graph K_{requested} exceeds embedding capacity {capacity}")]
    Capacity { requested: usize, capacity: usize },
    #[error("embedding failed: {0}")]
    EmbeddingFailure(String),
    #[error("logical edge ({0}, {1}) has no physical coupler in the embedding")]
    Coverage(Var, Var),
    #[error("variable {0} is missing")]
    MissingVariable(Var),
    #[error("offset {value} on qubit {qubit} is outside its range")]
    OffsetOutOfRange { qubit: QubitId, value: f64 },
    #[error("model has no variables")]
    EmptyModel,
    #[error("model has {variables} variables, exact solver limit is {limit}")]
    TooLarge { variables: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
