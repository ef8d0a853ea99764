//! Smooth ReLU (SmeLU) activations and a prediction-difference harness.
//!
//! The crate is organized bottom-up:
//!
//! - [`activations`]: SmeLU, generalized SmeLU, RESCU and the Softplus /
//!   Swish / GELU baselines, each with analytic derivatives.
//! - [`net`]: sparse-input MLP with embedding tables, weight or layer
//!   normalization, activation clipping and exact backpropagation.
//! - [`optim`]: SGD and per-coordinate AdaGrad with lazy sparse updates.
//! - [`metrics`]: relative prediction difference, AUC loss, per-query AUC
//!   loss and progressive validation.
//! - [`data`]: synthetic CTR-style streams and their text format.
//! - [`harness`]: duplicate-pair training, beta sweeps, loss landscapes and
//!   the ensemble baseline.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod activations;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod net;
pub mod optim;

pub use error::{Error, Result};
