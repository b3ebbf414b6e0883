//! Long-horizon event-sequence forecasting.
//!
//! The crate trains an autoregressive temporal point process
//! ([`model`]), trains an energy-based reranker over completed
//! sequences by noise-contrastive estimation ([`energy`], [`nce`]),
//! predicts multi-event continuations by normalized importance
//! sampling ([`infer`]), and evaluates predictions with count RMSE,
//! optimal transport distance, and cascading-error diagnostics
//! ([`metrics`]).
//!
//! See the `examples/` directory for a runnable walkthrough of each
//! capability; the `pointcast` binary wires them into a pipeline.

pub mod energy;
pub mod error;
pub mod infer;
pub mod io;
pub mod metrics;
pub mod model;
pub mod nce;
pub mod pipeline;
pub mod seq;
pub mod synth;
pub mod thinning;

pub use error::{Error, Result};
