//! Fixed-embedding parameter tuning for quantum annealers.
//!
//! The crate models a Chimera-topology annealer, embeds complete-graph
//! problems onto it with a fixed embedding, and tunes three families of
//! hardware parameters (spin reversal, anneal offsets, chain-weight
//! distribution) over whole classes of random problems with differential
//! evolution. The annealer itself is a classical simulated-annealing
//! emulation carrying an injectable hardware-bias model.
//!
//! Everything here is pure computation and builds without `std`; file
//! formats, configuration and the command line live in the `qatune` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod embedding;
pub mod error;
pub mod hwgraph;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod sampler;
pub mod transforms;
pub mod tuning;

pub use error::{Error, Result};
pub use hwgraph::{ChimeraSpec, HardwareGraph, QubitId};
pub use model::{IsingModel, QuboModel, Var};
