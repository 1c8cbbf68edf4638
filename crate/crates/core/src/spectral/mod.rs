//! Lattice geometry, interaction coefficients, the nonlinearity and its
//! Galerkin truncation, Sobolev norms, for both the regularized and the
//! stream-function formulations.

pub mod coefficients;
pub mod fast;
pub mod field;
pub mod lattice;
pub mod nonlinearity;
pub mod params;

pub use coefficients::{alpha, interaction_coefficient};
pub use fast::{fast_nonlinearity, minimum_grid, FastNonlinearity};
pub use field::SpectralField;
pub use lattice::{LatticeBox, LatticeMode};
pub use nonlinearity::{
    h1_pairing_defect, nonlinearity, project, project_complement, sobolev_norm_sq, truncated_nonlinearity,
    InteractionTable, OutputModes,
};
pub use params::{Formulation, ModelParams, StreamlineVariant};
