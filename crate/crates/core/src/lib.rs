//! Hybrid quantum sequence models on a batched, adjoint-differentiable
//! state-vector simulator, plus the statistics used to benchmark them.
//!
//! The crate is `no_std` and only needs `alloc`. Timing, file IO and the
//! command line live in the `qbench` crate.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod autograd;
pub mod bench;
pub mod data;
pub mod error;
pub mod matrix;
pub mod models;
pub mod qsim;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
