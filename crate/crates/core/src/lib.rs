//! Time-optimal control of spin qubits in NV centres.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterization;
pub mod cli;
pub mod error;
pub mod nv;
pub mod optim;
pub mod propagate;
pub mod pulse;
pub mod qbe;
pub mod quantum;
pub mod readout;
pub mod single;

pub use error::{Error, Result};
