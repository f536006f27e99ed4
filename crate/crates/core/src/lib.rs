//! Compressed-sensing sampling design on the sphere and the rotation group.

// `!(x > 0.0)` also rejects NaN; index loops walk parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coherence;
pub mod error;
pub mod experiment;
pub mod optimize;
pub mod patterns;
pub mod recover;
pub mod sensing;
pub mod specfun;

pub use error::{Error, Result};
