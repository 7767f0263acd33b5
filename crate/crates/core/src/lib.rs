//! Cue-seeded belief propagation for planted dense subgraph detection.
//!
//! The crate covers the whole pipeline: sampling `G(K, n, p, q)` instances
//! with perfect or imperfect cues ([`model`]), the two message-passing
//! detectors ([`bp`]), the density-evolution predictions of their asymptotic
//! error ([`de`]), a personalized PageRank baseline ([`ppr`]), error and
//! recall measures ([`metrics`]), graph ingestion ([`ingest`]) and the
//! experiment harness used by the `cuebp` binary ([`harness`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bp;
pub mod de;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod ppr;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use graph::Graph;
pub use model::{CueAssignment, CueModel, GroundTruth, ModelParams};
