//! Learning the topology and line parameters of a radial distribution
//! network from uniformly dithered, quantized smart-meter measurements.
//!
//! The pipeline is:
//!
//! 1. [`lcpf`] synthesizes voltages from power injections with the linear
//!    coupled power flow model.
//! 2. [`sensing`] lifts the problem onto the complete graph and builds the
//!    Khatri-Rao structured sensing operator `A`.
//! 3. [`quantizer`] applies a uniformly dithered quantizer to `A w*`.
//! 4. [`estimator`] solves the ℓ₁-constrained generalized LASSO and rounds
//!    the estimate to a spanning tree.
//! 5. [`bounds`] evaluates the Gaussian-width sample-complexity bound that
//!    predicts the estimation error, and [`experiments`] runs error-scaling
//!    sweeps against it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod graph;
pub mod lcpf;
pub mod quantizer;
pub mod sensing;

pub use error::{Error, Result};
