//! Command-line front end for the quantum sequence-model benchmark:
//! configuration, CSV input and output, the experiment grid, reports,
//! the Pareto plot and the self-check battery.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod report;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};
