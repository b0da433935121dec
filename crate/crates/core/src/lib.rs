//! Numerics for the critical Neumann problem with a subcritical penalty on
//! the N-ball: closed-form constants, point-centred field norms, the
//! energy functionals and the experiments that probe them.

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod geometry;
pub mod numerics;

pub use error::{Error, Result};
