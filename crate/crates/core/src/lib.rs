//! Streaming SVRG: a single-pass variance-reduced method for stochastic
//! convex objectives, together with ERM and SGD baselines, synthetic
//! problems with known optima, and tools to measure how close a run gets to
//! the ERM rate `σ²/N`.

// `!(x >= 0.0)` is the NaN-rejecting form used in every validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod config;
pub mod error;
pub mod linalg;
pub mod newton;
pub mod objectives;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod svrg;

pub use error::{Error, Result};
