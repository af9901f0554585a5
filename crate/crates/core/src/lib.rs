//! Infeasible short-step interior-point method for second-order cone
//! programs on the homogeneous self-dual embedding, with warm-start analysis.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cone;
pub mod error;
pub mod generate;
pub mod geometry;
pub mod io;
pub mod ipm;
pub mod kkt;
pub mod problem;
pub mod warm_start;

pub use error::{Result, SocpError};
