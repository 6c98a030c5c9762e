//! Numerical tools for complex Ginzburg-Landau vortices: grids and fields,
//! radial profiles and ansatz constructions, relaxation solvers, vortex
//! analysis, Hodge decomposition of currents and reproducible experiments.

// Negated comparisons are the deliberate NaN-rejecting form of validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod ansatz;
pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod hodge;
pub mod io;
pub mod ops;
pub mod poisson;
pub mod profile;
pub mod report;
pub mod solver;
pub mod vortex;
mod par;

pub use error::{Error, Result};
pub use field::{ComplexField, OneFormField, ScalarField, TensorField, TwoFormField};
pub use grid::{GridSpec, Region, Topology};
