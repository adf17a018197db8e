//! Gene-disease association benchmark.
//!
//! Two families of predictors are compared under one rank-based protocol:
//! link prediction with knowledge graph embeddings ([`embed`]) and node-pair
//! classification over walk embeddings ([`walker`], [`pairclf`]). [`eval`]
//! turns both into candidate rankings and computes hits@k.

pub mod embed;
pub mod error;
pub mod eval;
pub mod kg;
pub mod pairclf;
pub mod par;
pub mod pipeline;
pub mod split;
pub mod synth;
pub mod walker;

pub use error::{Error, Result};
