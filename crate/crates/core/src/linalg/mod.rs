//! Sparse storage and the two solvers the discretization needs: Jacobi
//! preconditioned conjugate gradients for the symmetric positive definite
//! condensed system, and a banded LU with partial pivoting (after reverse
//! Cuthill-McKee reordering) for the nonsymmetric projection systems.

mod cg;
mod lu;
mod sparse;

pub use cg::{cg_solve, CgOutcome, DEFAULT_CG_TOL};
pub use lu::{lu_solve, lu_solve_dense, reverse_cuthill_mckee};
pub use sparse::{SparseMatrix, TripletBuilder};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
