//! Simulation, comparison, and verification harness behind the `odm` CLI.

pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod run;
pub mod trace_csv;

pub use error::{HarnessError, Result};
