//! Inertial Krasnoselskii-Mann iterations for (quasi-)nonexpansive operators.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense vectors, block vectors, linear maps, Cholesky, Jacobi
//!   eigenvalues and power iteration.
//! - [`operators`]: proximal maps and the gradient, proximal,
//!   forward-backward, Douglas-Rachford, primal-dual, split Douglas-Rachford
//!   and Davis-Yin operators as [`operators::OperatorHandle`]s.
//! - [`engine`]: the inertial KM driver, per-iteration diagnostics and the
//!   Lyapunov inequality checks.
//! - [`certificates`]: closed-form parameter feasibility tests, contraction
//!   constants, rate bounds and the `lambda_{alpha,q}` root finder.
//! - [`problems`]: seeded benchmark instances with reference solutions.
//! - [`cli`]: config format, trace CSV format and the subcommands.

// `!(x <= y)` is used on purpose so NaN fails a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cli;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod rng;

pub use error::{Error, Result};
