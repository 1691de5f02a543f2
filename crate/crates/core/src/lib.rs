//! Multilayer linearized rotating shallow-water tide model.
//!
//! Lowest-order Raviart–Thomas / piecewise-constant mixed finite elements on a
//! structured triangulation of the unit square, implicit midpoint time
//! stepping, and right-preconditioned GMRES with a family of block
//! preconditioners built around the layer coupling matrix and its explicit
//! tridiagonal inverse.
//!
//! Module map:
//! - [`mesh`]: structured right-triangle meshes with oriented edges
//! - [`sparse`]: CSR, ILU(0), sparse direct LU, dense helpers
//! - [`fem`]: single-layer RT0 × DG0 matrices
//! - [`layers`]: coupling matrix, its inverse, LDLᵀ, spectral bounds, Kronecker lifting
//! - [`system`]: the multilayer block system, midpoint stepping, energy
//! - [`precond`]: monolithic ILU(0) and the three weighted-norm variants
//! - [`krylov`]: unrestarted GMRES with right preconditioning
//! - [`analysis`]: numerical checks of the continuity/inf-sup and equivalence bounds
//! - [`experiment`]: parameter sweeps and the verification driver behind the CLI

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod krylov;
pub mod layers;
pub mod mesh;
pub mod precond;
pub mod sparse;
pub mod system;

pub use error::{Error, Result};
