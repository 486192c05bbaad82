//! Limit cycles, stability and thermodynamics of a periodically driven,
//! damped bosonic mode.

// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ode;
pub mod dynamics;
pub mod floquet;
pub mod battery;
pub mod protocol;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};
