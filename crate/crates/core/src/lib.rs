//! Simulation, separation, imaging and rank analysis of synthetic aperture
//! radar traces containing stationary and moving point targets.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod interp;
pub mod motionest;
pub mod rank;
pub mod rpca;
pub mod signal;
pub mod tracematrix;

pub use error::{Error, Result};
