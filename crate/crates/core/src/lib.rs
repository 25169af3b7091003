//! Negative moments of characteristic polynomials of GOE random matrices:
//! sampling, the central integrals `F_n(ε)`, their asymptotic laws, and
//! Monte Carlo checks of the large-N ratio.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod acceptance;
pub mod asymptotics;
pub mod eigen;
pub mod error;
pub mod fneval;
pub mod moments;
pub mod pfaffian;
pub mod quad;
pub mod rmt;
pub mod rng;
pub mod specialfns;

pub use error::{Error, Result};
