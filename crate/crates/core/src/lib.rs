pub mod class_fn;
pub mod equidistribution;
pub mod error;
pub mod harness;
pub mod limits;
pub mod multiplier;
pub mod numeric;
pub mod permutation;
pub mod quadrature;

pub use error::{Error, Result};
