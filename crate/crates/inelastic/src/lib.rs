//! Semiclassical dynamics of a one-dimensional test particle coupled
//! inelastically to a harmonic oscillator.
//!
//! The crate provides three independent routes to the same physics and the
//! machinery to compare them:
//!
//! * [`solver`] — an exact (numerically converged) split-step spectral solver
//!   for the coupled system in the oscillator-mode representation,
//! * [`duhamel`] — direct quadrature of the iterated interaction integrals of
//!   the perturbation series,
//! * [`expansion`] — the asymptotic expansion coefficients in the scaling
//!   parameter ε, in closed form and by quadrature of the general formula.
//!
//! [`experiments`] turns those routes into reproducible convergence studies
//! and the superposition/decoherence application; [`acceptance`] packages the
//! tolerance gates used by `inelastic check` and the acceptance test suite.

pub mod acceptance;
pub mod basis;
pub mod config;
pub mod duhamel;
pub mod error;
pub mod expansion;
pub mod experiments;
pub mod model;
pub mod output;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};

/// Complex double, used for every field and amplitude in the crate.
pub type C64 = num_complex::Complex64;
