// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod observation;
pub mod rng;
pub mod spectral;
pub mod theory;
pub mod var_core;

pub use error::{Error, Result};
