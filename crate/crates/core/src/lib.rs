//! Semirandom list coloring for strong and distance-t edge colorings.
//!
//! The pipeline builds the conflict graph `L(G)^t` of a base graph, runs the
//! wasteful nibble (activate, assign, wastefully delete, equalize, trim)
//! along a precomputed parameter schedule, and completes the residual with a
//! resampling finisher. Brute-force oracles and structural audits verify the
//! pieces at small scale.

pub mod cli;
pub mod error;
pub mod finisher;
pub mod generators;
pub mod graph;
pub mod nibble;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod structure;

pub use error::{Error, Result};
