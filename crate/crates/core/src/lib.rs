//! Drift reduction for SDEs driven by cylindrical symmetric stable-like noise.
//!
//! The crate integrates the characteristic flows of the drift, builds the
//! reduced jump coefficients, simulates both the original and the reduced
//! equation, and evaluates principal transition densities together with the
//! exact oracles used to check them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod flow;
pub mod levy;
pub mod numerics;
pub mod reduction;
pub mod sim;

pub use error::{Error, Result};
