//! Decide whether a belief question can be elicited without distorting a
//! decision, build a payment scheme when it can, and check schemes
//! numerically over the belief simplex.

pub mod alignment;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
