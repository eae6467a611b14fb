//! Truncated chiral Fock-space models of wedge-local nets twisted by S-matrices.

pub mod bls;
pub mod calibration;
pub mod error;
pub mod fock;
pub mod innerfun;
pub mod linalg;
pub mod onepspace;
pub mod report;
pub mod runner;
pub mod scattering;
pub mod smatrix;
pub mod twosided;
pub mod wedge;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
