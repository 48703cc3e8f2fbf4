//! Causal structure discovery with latent variables.
//!
//! The crate provides, bottom to top:
//!
//! - [`graph`]: directed graphs and all purely structural queries (treks,
//!   d-/t-separation, k-trek systems, triangles, random DAGs);
//! - [`sem`]: linear structural equation models, their population covariance
//!   and cumulant tensors, and seeded sampling;
//! - [`stats`]: conditional-independence, rank, kernel, and
//!   residual-independence tests;
//! - [`tensor`]: cumulant tensors, the combinatorial hyperdeterminant, and
//!   the multi-trek tensor constraint;
//! - [`vcsgs`]: the conservative structure-search algorithm with edge
//!   estimation and error classification;
//! - [`faithfulness`]: Monte-Carlo studies of faithfulness-assumption
//!   violations;
//! - [`discovery`]: latent clustering, cycle detection, and causal-order
//!   learning, with interchangeable statistical and graph-oracle backends;
//! - [`catalog`]: small benchmark graphs used throughout.

pub mod catalog;
pub mod discovery;
pub mod error;
pub mod faithfulness;
pub mod graph;
pub mod numeric;
pub mod sem;
pub mod stats;
pub mod tensor;
pub mod vcsgs;

pub use error::{Error, Result};
