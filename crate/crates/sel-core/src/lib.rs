//! Simulation laboratory for the one-dimensional stochastic isentropic
//! compressible Euler equations with linear damping.
//!
//! The library provides:
//! - the gamma-law model, grids, states, noise coefficients, and seeded
//!   Brownian paths ([`params`], [`grid`], [`state`], [`noise`], [`brownian`]);
//! - the kinetic weak entropy family and pressure-law checks ([`entropy`]);
//! - the viscous deterministic solver `S` and the stochastic momentum
//!   update `R` ([`det`], [`stoch`]);
//! - the interpolated Lie-Trotter driver with entropy-balance accounting
//!   ([`splitting`]);
//! - long-time diagnostics: transformed variables, the Gronwall functional,
//!   ensemble moments, and decay fitting ([`longtime`]);
//! - a porous-medium reference solver with Darcy momentum ([`pme`]);
//! - config parsing, seed derivation, the ensemble harness, and CSV/manifest
//!   output ([`config`], [`ensemble`], [`output`]).

// `!(x > a)` is used deliberately in validations so NaN fails the check;
// index loops routinely walk several cell arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod brownian;
pub mod config;
pub mod det;
pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod grid;
pub mod init;
pub mod longtime;
pub mod noise;
pub mod output;
pub mod params;
pub mod pme;
pub mod quad;
pub mod splitting;
pub mod state;
pub mod stoch;

pub use brownian::BrownianPath;
pub use error::{Result, SelError};
pub use grid::Grid;
pub use noise::NoiseSpec;
pub use params::{make_params, ModelParams};
pub use state::FieldState;
