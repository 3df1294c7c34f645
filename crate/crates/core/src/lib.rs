//! Temperature dynamics driven by a two-regime switching Levy Ornstein-Uhlenbeck
//! process: switching-time laws, the characteristic function of the
//! temperature, the Esscher martingale condition and a Monte Carlo oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod error;
pub mod esscher;
pub mod mc;
pub mod model;
pub mod noise;
pub mod numerics;
pub mod regimes;
pub mod specfun;

pub use error::{Error, Result};
