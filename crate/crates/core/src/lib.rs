//! Gaussian integrators `x(t) = (A·1_[0,t], ξ)` on a uniform grid, their local
//! time, and numerical checks of its chaos, Clark and minimal-norm
//! representations.
//!
//! The white noise `ξ` lives on a grid of `n` cells as a vector of iid
//! standard normals; an operator `A` acts on step functions as an `n × n`
//! matrix. Monte Carlo estimators run over paths in parallel when the
//! `parallel` feature is enabled and sequentially otherwise, with identical
//! results either way.

// Guards of the form `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod chaos;
pub mod error;
pub mod local_time;
pub mod operator;
pub mod representations;
pub mod sim;

pub use error::{LabError, Result};
