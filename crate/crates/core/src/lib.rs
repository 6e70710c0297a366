//! Simulation and analysis of entropy-structured reaction-diffusion systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`crn`] holds reaction networks, the text format and mass-action kinetics.
//! * [`analysis`] finds conservation laws, complex-balanced and boundary
//!   equilibria, and samples the structural conditions on the nonlinearity.
//! * [`grid`] discretises intervals and rectangles and evaluates the norms,
//!   entropy and dissipation functionals.
//! * [`solver`] integrates the reaction-diffusion system with Strang splitting.
//! * [`diagnostics`] turns simulation series into verdicts and fits.
//! * [`inequality`] checks the truncated Gagliardo-Nirenberg chain and related
//!   elementary bounds numerically.
//!
//! Data-parallel loops go through [`par`], which falls back to sequential
//! iteration when the `parallel` feature is disabled. Results never depend on
//! the number of threads.

pub mod analysis;
pub mod crn;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod inequality;
pub mod linalg;
pub mod par;
pub mod solver;

pub use error::{Error, Result};
