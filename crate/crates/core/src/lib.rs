//! Spectral-Galerkin toolkit for the inviscid modified SQG family
//! `theta_t + u . grad theta = 0`, `u = R^perp |D|^{-delta} theta`.
//!
//! The crate implements the truncated flows `d/dt Psi = B^N(Psi)`, samples
//! the Gaussian measures built from their conserved quadratic form, and
//! provides the numerical checks around them: conservation, Liouville,
//! ensemble invariance, lattice-sum estimates for `E ||B||^2_{H^s}` and the
//! breakdown at `delta = 0`.
//!
//! The spectral core is generic over the scalar type ([`Real`]); statistics
//! and lattice sums are carried out in `f64`.

pub mod error;
pub mod expectation;
pub mod flow;
pub mod gibbs;
pub mod invariance;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod report;
pub mod summation;

pub use error::{Error, Result};
pub use scalar::Real;
pub use spectral::{Formulation, LatticeBox, LatticeMode, ModelParams, SpectralField, StreamlineVariant};

/// Double-precision field, the default for experiments.
pub type Field = SpectralField<f64>;
/// Single-precision field.
pub type Field32 = SpectralField<f32>;
/// Double-precision truncated flow.
pub type Flow = flow::GalerkinFlow<f64>;
/// Double-precision trajectory.
pub type Trajectory = flow::Trajectory<f64>;
/// Complex coefficient in double precision.
pub type Complex64 = num_complex::Complex<f64>;
