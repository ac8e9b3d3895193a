//! File formats, parallel simulation and the `varswap` command line on top
//! of `varswap-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod figures;
pub mod io;
pub mod manifest;
pub mod runner;

pub use error::{Error, Result};
