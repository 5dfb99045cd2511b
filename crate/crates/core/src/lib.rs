//! Poisson(β) random hypergraphs and the identifiability collapse process.
//!
//! The crate is organised bottom-up:
//!
//! * [`beta_series`] holds the edge-density generating function and the
//!   threshold analytics derived from it (deficiency, `z*`, tangential zeros).
//! * [`hypergraph`] is the exact engine: sampling, single-vertex removal,
//!   randomized collapse and the deterministic peeling fixpoint.
//! * [`chain`] is the reduced patch/debris Markov chain, equal in law to the
//!   exact engine for the quantities it tracks.
//! * [`fluid`] contains the deterministic limit path, its drift and
//!   diffusion, the fluctuation variance and the limiting random variable `Z`.
//! * [`montecarlo`] runs seeded replica sweeps and the critical-α search.
//! * [`cli`] is the command-line front end.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta_series;
pub mod chain;
pub mod cli;
pub mod error;
pub mod fluid;
pub mod hypergraph;
pub mod io;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod roots;

pub use beta_series::{BetaSeries, CriticalStructure};
pub use chain::{ChainRun, ChainState};
pub use error::{Error, Result};
pub use fluid::{FluctuationSample, FluidModel};
pub use hypergraph::{CollapseOutcome, EdgeStats, Hypergraph};
pub use montecarlo::{ExperimentConfig, ExperimentResult};
