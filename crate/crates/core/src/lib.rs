//! Random-horizon insider trading: equilibrium dynamics, simulation and
//! statistical verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernoulli;
pub mod cli;
pub mod deriv;
pub mod error;
pub mod general;
pub mod ou;
pub mod quadrature;
pub mod roots;
pub mod sde;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
