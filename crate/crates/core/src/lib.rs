//! Signed directed graph contrastive learning.
//!
//! The crate is organised along the pipeline:
//!
//! - [`graph`]: signed directed graphs, edge-list loading, 60/20/20 splits and
//!   3:1 positive sampling.
//! - [`augment`]: structure perturbation (sign and direction flips) and phase
//!   (`q`) sampling for the two contrastive views.
//! - [`spectral`]: the signed magnetic Laplacian family, the renormalised
//!   propagation operator, dense eigendecomposition and Chebyshev filters.
//! - [`encoder`]: the fixed two-layer complex spectral encoder, projection
//!   head, view fusion and edge predictor (forward pass only).
//! - [`training`]: contrastive and label losses, reverse-mode gradients,
//!   Adam, finite-difference checking and the training loop.
//! - [`eval`]: AUC and the F1 family for link sign prediction.

pub mod augment;
pub mod checkpoint;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod spectral;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
