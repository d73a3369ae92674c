//! Synthesis of privacy-preserving fake location traces from real seeds,
//! plus quantitative privacy and utility evaluation.
//!
//! The pipeline: learn per-user mobility profiles from discrete traces,
//! measure pairwise geographic/semantic similarity, cluster locations into
//! semantic classes, lift seed traces into the semantic domain, decode
//! fakes with a randomized Viterbi pass against the smoothed aggregate
//! model, and gate every fake behind a three-part privacy test. The
//! `attack` and `stats` modules evaluate the result in the
//! location-based-service and dataset-publishing scenarios.

pub mod attack;
pub mod config;
pub mod corpus;
pub mod error;
pub mod generator;
pub mod metrics;
pub mod mobility;
pub mod numeric;
pub mod privacy;
pub mod semantics;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// Concrete scalar used by the pipeline; the kernels in [`numeric`] stay
/// generic over `num_traits::Float`.
pub type Scalar = f64;
