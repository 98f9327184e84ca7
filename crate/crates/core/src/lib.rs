//! Simulation and multipower-variation inference for Brownian semistationary processes
//! `Y_t = ∫_{−∞}^t g(t − s) σ_s W(ds)`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod gaussmom;
pub mod harness;
pub mod kernels;
pub mod mpv;
pub mod numerics;
pub mod pathsim;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
