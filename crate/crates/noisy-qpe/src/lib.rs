//! Simulation and benchmarking of noise-robust quantum phase estimation.
//!
//! The crate models the outcome distributions of sin-state QPE and Hadamard-test
//! circuits under global depolarizing noise, implements the estimators that
//! consume them (robust phase estimation, multi-circuit sin-state QPE, and the
//! explicitly unbiased maximum-likelihood estimator for quasiprobability
//! decompositions), and couples the resulting circuit costs to a surface-code
//! resource model.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod eumle;
pub mod faultcost;
pub mod harness;
pub mod information;
pub mod stats;

pub use error::{Error, Result};
