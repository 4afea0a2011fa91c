//! Numerical laboratory for the semilinear wave equation
//! `u_tt - div(a(t,x)∇u) = f_k(u)` with time-periodic coefficients.
//!
//! The crate is organised bottom-up: [`exponents`] holds the Strichartz
//! exponent algebra, [`metric`] the coefficient families, [`wavegrid`] the
//! linear solver and norms, [`duhamel`] the nonlinear fixed-point machinery,
//! [`geometry`] the ray tracer and [`monodromy`] the period-map probes.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod duhamel;
pub mod error;
pub mod exponents;
pub mod geometry;
pub mod metric;
pub mod monodromy;
pub mod wavegrid;

pub use error::{Error, Result};
