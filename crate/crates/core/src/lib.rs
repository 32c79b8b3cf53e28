//! Backward Euler primal DPG discretization of linear parabolic
//! advection-diffusion-reaction problems on the unit square.
//!
//! The trial space couples a conforming `P^{p+1}` field with homogeneous
//! Dirichlet data and a facewise `P^p` flux trace on the mesh skeleton.
//! Test functions live in the broken space `P^{p+2}`, so the Gram matrix of
//! the time-step dependent test inner product is block diagonal and optimal
//! test functions are computed element by element.
//!
//! Module map:
//!
//! - [`mesh`]: structured triangulations, red refinement, edge orientation.
//! - [`basis`], [`quadrature`]: Lagrange tables and Gauss rules.
//! - [`dofmap`]: global numbering of field and trace unknowns.
//! - [`assembly`]: local Gram / trial-to-test blocks and the condensed system.
//! - [`linalg`]: CSR storage, Jacobi-preconditioned CG, banded LU.
//! - [`timestep`]: the backward Euler march.
//! - [`projection`]: the elliptic projection and its mixed form.
//! - [`norms`]: error functionals and convergence rates.
//! - [`galerkin`]: standard Galerkin heat solver used as a cross-check.
//! - [`cases`], [`config`], [`study`]: manufactured solutions and the
//!   convergence-study driver behind the `dpgmarch` binary.

pub mod assembly;
pub mod basis;
pub mod cases;
pub mod config;
pub mod dofmap;
mod error;
pub mod galerkin;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod projection;
pub mod quadrature;
pub mod study;
pub mod timestep;

pub use error::{DpgError, Result};

/// A point in the plane.
pub type Point = [f64; 2];
