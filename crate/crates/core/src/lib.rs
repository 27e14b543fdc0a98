//! Replica statistical-mechanics simulator for noisy random brickwork encoders.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asym;
pub mod error;
pub mod lattice;
pub mod noise;
pub mod oracle;
pub mod sym;

pub use error::{Error, Result};
