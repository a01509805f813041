//! Low-dimensional embeddings of sparse binary somatic mutation profiles.
//!
//! The crate is organised the way data flows through it:
//!
//! * [`data`] parses mutation records, collapses them to positional keys and
//!   builds the binary occurrence matrix (plus a planted-cluster generator).
//! * [`kernel`] holds the dense kernels and hand-written backward passes.
//! * [`vae`] assembles the MLP variational autoencoder and trains it.
//! * [`eval`] scores reconstructions and embeddings (micro-F1, cosine,
//!   k-means + NMI, PCA, linear classification).

pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod rng;
pub mod vae;

pub use error::{Error, Result};
