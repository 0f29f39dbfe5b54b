//! Simulation of the LOCAL and SLOCAL models of distributed graph computation,
//! together with the symmetry-breaking, decomposition, derandomization,
//! local-lemma and round-elimination algorithms built on top of it.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and experiment sweeps live in the `localsim` crate.
#![no_std]

extern crate alloc;

pub mod ball;
pub mod compilers;
pub mod decomposition;
pub mod dyadic;
pub mod engine;
pub mod generators;
pub mod graph;
pub mod ids;
pub mod lll;
pub mod problems;
pub mod rng;
pub mod round_elim;
pub mod symmetry;
pub mod tape;

pub use ball::{Ball, CanonicalBall};
pub use dyadic::Dyadic;
pub use engine::{EngineError, LocalAlgorithm, Protocol, RunResult, SequentialAlgorithm};
pub use graph::{Graph, GraphError};
pub use ids::IdAssignment;
pub use problems::{CheckReport, LocalProblem};
pub use tape::RandomTape;
