//! Coded distributed computation over prime fields: polynomial codes for
//! `C = Aᵀ B`, baselines, coded convolution, a straggler harness and a
//! latency simulator.

pub mod cluster;
pub mod convolution;
pub mod error;
pub mod exec;
pub mod field;
pub mod matrix;
pub mod schemes;
pub mod sim;
pub mod textio;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::{FieldCtx, FieldElem};
pub use matrix::{FMatrix, ProblemShape};
