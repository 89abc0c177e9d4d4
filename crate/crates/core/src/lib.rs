// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod crosssec;
pub mod error;
pub mod fields;
pub mod host_sphere;
pub mod media;
pub mod quadrature;
pub mod specfun;
pub mod theorems;

pub use error::{Error, Result};
