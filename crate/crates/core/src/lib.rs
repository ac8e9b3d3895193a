//! Pricing core for continuously monitored variance swaps on time-changed
//! exponential Markov processes.
//!
//! The log forward `X = log F` is a Markov process with local volatility
//! `a(x)` and Lévy kernel `μ(x, dz)`, run on an arbitrary continuous clock.
//! A European payoff `G` prices the variance swap whenever
//!
//! ```text
//! A G(x) = a²(x) + ∫ z² μ(x, dz)
//! ```
//!
//! where `A` is the integro-differential generator of `X`. The crate
//! provides:
//!
//! * [`model`]: local characteristics, generator, drift and QV rate;
//! * [`payoff`]: the closed payoff algebra with exact derivatives;
//! * [`solvers`]: closed-form and series solutions of the equation above;
//! * [`replication`]: static replication of `G` from a call/put smile;
//! * [`mc`]: Euler/thinning path simulation of time-changed jump diffusions;
//! * [`ratio`]: the closed-form approximation of the VS / log-contract ratio.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the parallel
//! path runner and the command line live in the `varswap` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod kernel;
pub mod mc;
pub mod model;
pub mod payoff;
pub mod presets;
pub mod quadrature;
pub mod ratio;
pub mod replication;
pub mod solvers;

pub use error::{Error, Result};
pub use kernel::{DensityShape, JumpDensity, LevyKernel, LocalKernel};
pub use model::{KernelSpec, ModelSpec, ScaleFn, ValidationReport, VolSpec};
pub use payoff::{Order, Payoff, PriceSpacePayoff};
