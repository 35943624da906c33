//! Command-line front end for the `spaceform` library: run configuration,
//! the canonical parameter set, convergence studies and the verification
//! suite.

pub mod canonical;
pub mod config;
pub mod convergence;
pub mod verify;
