//! Movie-success modeling from production metadata and review streams.
//!
//! The crate wires five stages into one reproducible pipeline:
//!
//! 1. [`ingest`] — CSV schemas for movies and reviews, author anonymization,
//!    resumable pipeline state, and a planted-signal synthetic generator.
//! 2. [`sentiment`] — per-review multidimensional sentiment via a pluggable
//!    extractor (deterministic stub or remote chat-completion endpoint) and
//!    exponentially decayed temporal aggregation.
//! 3. [`sir`] — susceptible/infected/recovered diffusion dynamics fitted
//!    from review timelines, yielding virality features.
//! 4. [`features`] — winsorization, Yeo-Johnson transforms, PCA compression
//!    of the diffusion parameters, and assembly of the group-tagged feature
//!    vector with ablation masks.
//! 5. [`mtl`] — a from-scratch multi-task network (shared SELU trunk,
//!    classification and regression heads, uncertainty-weighted loss,
//!    Adam, early stopping) plus [`eval`] for metrics, splits, k-fold
//!    cross-validation, and the ablation harness.
//!
//! [`pipeline`] glues the stages together for the CLI and test harnesses.

// Guards written as `!(x > 0.0)` intentionally treat NaN as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod mtl;
pub mod pipeline;
pub mod sentiment;
pub mod sir;

pub use error::{Error, Result};
