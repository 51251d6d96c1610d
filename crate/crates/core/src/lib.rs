//! Additional-sampling stochastic projected gradient for box-constrained
//! weighted finite sums, with baselines, test problems and an experiment
//! harness.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data_io;
pub mod driver;
pub mod error;
pub mod fev;
pub mod geometry;
pub mod harness;
pub mod line_search;
pub mod problems;
pub mod rng;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result};
