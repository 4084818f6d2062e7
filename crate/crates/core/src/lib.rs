//! Stokes and Navier–Stokes flows with Navier slip boundary conditions.

pub mod error;
pub mod acceptance;
pub mod cli;
pub mod discretization;
pub mod evolution;
pub mod fit;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod limits;
pub mod local_estimates;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod stokes;

pub use error::{Error, Result};
