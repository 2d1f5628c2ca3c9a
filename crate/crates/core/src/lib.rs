// `!(x > 0.0)` deliberately treats NaN as invalid.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod engine;
pub mod error;
pub mod market;
pub mod regulation;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
