//! Jump-diffusion SIS and SIRS epidemic models.
//!
//! The crate simulates the stochastic systems, evaluates the closed-form
//! conditions for stability of the disease-free equilibrium, and checks the
//! analytic generator formulas and exit probabilities against Monte Carlo.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod kernel;
pub mod models;
pub mod panels;
pub mod quadrature;
pub mod stability;

pub use error::{Error, Result};
