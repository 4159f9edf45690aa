//! Colored noise on the flat torus and the parabolic Anderson model driven by it.

pub mod bridge;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod heat_kernel;
pub mod io;
pub mod lattice;
pub mod moment_calculus;
pub mod noise_field;
pub mod pam_solver;
pub mod quadrature;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
