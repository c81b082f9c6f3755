//! Exact transition probabilities for the three-state Landau-Zener-Coulomb
//! model, together with the numerical machinery used to check them.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: complex gamma and Gauss hypergeometric functions.
//! - [`quad`] and [`ode`]: adaptive Gauss-Kronrod quadrature and a
//!   Dormand-Prince 8(5,3) integrator for complex-valued problems.
//! - [`model`]: model parameters, shorthands, slope cases and the
//!   closed-form 3x3 transition matrix.
//! - [`propagator`]: brute-force integration of the Schrodinger equation,
//!   used as an independent oracle for the closed form.
//! - [`contour`]: direct quadrature of the contour-integral solutions.
//! - [`spectrum`]: adiabatic energies of the Hamiltonian.
//! - [`sampling`]: seeded random parameter draws shared by the test suites.

pub mod contour;
pub mod error;
pub mod model;
pub mod ode;
pub mod propagator;
pub mod quad;
pub mod sampling;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{ModelParams, Shorthands, SlopeCase, TransitionMatrix};
pub use num_complex::Complex64;
