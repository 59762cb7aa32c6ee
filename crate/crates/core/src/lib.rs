//! Optimal power flow with a step-controlled primal-dual interior point
//! method whose Newton systems can be solved classically, with HHL, or with
//! a variational linear solver running on a statevector simulator.

// `!(x <= tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backend;
pub mod error;
pub mod experiment;
pub mod hhl;
pub mod ipm;
pub mod linalg;
pub mod network;
pub mod opf;
pub mod quantum;
pub mod vqls;

pub use error::{Error, Result};
