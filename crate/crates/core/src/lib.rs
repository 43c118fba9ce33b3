#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Integrable and superintegrable geodesic flows generated by the
//! non-standard deformation of the sl(2) Poisson coalgebra.
//!
//! The crate is organised bottom-up:
//!
//! - [`scalar`] and [`function`]: dual-number scalars and differentiable
//!   phase-space functions;
//! - [`coalgebra`]: N-site realizations, Casimirs, Hamiltonians, integrals;
//! - [`poisson`]: exact brackets and verification primitives;
//! - [`geometry`]: metrics read off Hamiltonians and their curvature;
//! - [`coordinates`]: κ-trigonometry and the geodesic polar charts;
//! - [`integrator`]: symplectic integration with conservation monitoring;
//! - [`cli`]: the `coflow` command-line application.

pub mod cli;
pub mod coalgebra;
pub mod coordinates;
pub mod error;
pub mod function;
pub mod geometry;
pub mod integrator;
pub mod poisson;
pub mod scalar;

pub use error::{Error, Result};
pub use function::{DiffFn, Expr, PhaseFunction, PhasePoint, PositionFunction};
pub use scalar::{Dual, Scalar};
