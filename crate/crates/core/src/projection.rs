//! The elliptic projection `E_h`: find `u_h` in `U_h` with
//! `b(u_h, Theta_h w) = b(u, Theta_h w)` for all trial `w`, where `u` pairs a
//! smooth field with its flux trace `(A grad u) . n_e`.
//!
//! The system matrix `N = sum_K B_a^T G^{-1} B_b` is not symmetric and is
//! solved directly. [`project_mixed`] solves the equivalent saddle point
//! problem `G v + B_b u = l`, `B_a^T v = 0` as an independent check.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::assembly::{
    element_blocks, local_trial_to_test, reference_edge_point, scatter_add,
    Discretization, Form, PdeCoefficients,
};
use crate::linalg::{lu_solve, SparseMatrix, TripletBuilder};
use crate::mesh::local_edge_vertices;
use crate::quadrature::{edge_rule, MAX_EXACT_DEGREE};
use crate::timestep::TrialVector;
use crate::{DpgError, Point, Result};

/// A smooth stationary solution given by its value and gradient.
#[derive(Clone, Copy)]
pub struct ExactSolution<'a> {
    pub u: &'a dyn Fn(Point) -> f64,
    pub grad: &'a dyn Fn(Point) -> Point,
}

#[derive(Clone, Debug)]
pub struct ProjectionBlocks {
    pub gram: DMatrix<f64>,
    pub gram_chol: Cholesky<f64, nalgebra::Dyn>,
    pub b_a: DMatrix<f64>,
    pub b_b: DMatrix<f64>,
    /// `G^{-1} B_a`
    pub theta: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct ProjectionSystem {
    pub matrix: SparseMatrix,
    pub coeffs: PdeCoefficients,
    pub blocks: Vec<ProjectionBlocks>,
}

impl ProjectionSystem {
    pub fn new(disc: &Discretization, coeffs: &PdeCoefficients) -> Result<Self> {
        coeffs.validate()?;
        let n = disc.n_dofs();
        let mut builder = TripletBuilder::new(n, n);
        let mut blocks = Vec::with_capacity(disc.mesh.n_elements());
        for k in 0..disc.mesh.n_elements() {
            let eb = element_blocks(disc, coeffs, k)?;
            let b_b = local_trial_to_test(disc.geometry(k), &disc.mesh.element_edges[k], coeffs, &disc.spaces, Form::B);
            let local = eb.theta.transpose() * &b_b;
            let dofs = disc.dofmap.element_dofs(k);
            for (a, da) in dofs.iter().enumerate() {
                let Some(ga) = *da else { continue };
                for (b, db) in dofs.iter().enumerate() {
                    let Some(gb) = *db else { continue };
                    builder.add(ga, gb, local[(a, b)]);
                }
            }
            blocks.push(ProjectionBlocks {
                gram: eb.gram,
                gram_chol: eb.gram_chol,
                b_a: eb.b_a,
                b_b,
                theta: eb.theta,
            });
        }
        Ok(ProjectionSystem {
            matrix: builder.build(),
            coeffs: *coeffs,
            blocks,
        })
    }

    /// Per element, `l[m] = b(u, psi_m)` for the exact pair `(u, (A grad u) . n_e)`.
    pub fn exact_loads(&self, disc: &Discretization, exact: ExactSolution<'_>) -> Result<Vec<DVector<f64>>> {
        let c = &self.coeffs;
        let spaces = &disc.spaces;
        let erule = edge_rule((disc.p() + spaces.test.degree() + 6).min(MAX_EXACT_DEGREE))?;
        let mut out = Vec::with_capacity(disc.mesh.n_elements());
        for k in 0..disc.mesh.n_elements() {
            let geom = disc.geometry(k);
            let mut l = DVector::zeros(spaces.n_test());
            for (q, (&xi, &w)) in spaces.load_rule.points.iter().zip(&spaces.load_rule.weights).enumerate() {
                let x = geom.map(xi);
                let g = (exact.grad)(x);
                let flux = c.flux(g);
                let zeroth = c.advection[0] * g[0] + c.advection[1] * g[1] + c.reaction * (exact.u)(x);
                let wq = w * geom.det;
                for (m, (v, r)) in spaces.load_test_values[q].iter().zip(&spaces.load_test_grads[q]).enumerate() {
                    let gv = geom.grad(*r);
                    l[m] += wq * (flux[0] * gv[0] + flux[1] * gv[1] + zeroth * v);
                }
            }
            for (i, le) in disc.mesh.element_edges[k].iter().enumerate() {
                let n = disc.mesh.edge_normal(le.edge);
                let len = geom.edge_length(i);
                let (a, b) = local_edge_vertices(i);
                let (pa, pb) = (geom.vertices[a], geom.vertices[b]);
                for (&s, &w) in erule.points.iter().zip(&erule.weights) {
                    let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                    let sigma = c.flux((exact.grad)(x));
                    let sn = sigma[0] * n[0] + sigma[1] * n[1];
                    let scale = -le.sign * w * len * sn;
                    for (m, v) in spaces.test.values(reference_edge_point(i, s)).iter().enumerate() {
                        l[m] += scale * v;
                    }
                }
            }
            out.push(l);
        }
        Ok(out)
    }

    /// Per element, `l = B_b x_K` for a discrete trial vector `x`.
    pub fn discrete_loads(&self, disc: &Discretization, x: &[f64]) -> Vec<DVector<f64>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, blk)| &blk.b_b * disc.local_trial(k, x))
            .collect()
    }

    /// `b(u, Theta_h phi_i)` for every free trial unknown.
    pub fn rhs(&self, disc: &Discretization, loads: &[DVector<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; disc.n_dofs()];
        for (k, (blk, l)) in self.blocks.iter().zip(loads).enumerate() {
            scatter_add(disc, k, &(blk.theta.transpose() * l), &mut out);
        }
        out
    }

    pub fn solve(&self, disc: &Discretization, loads: &[DVector<f64>]) -> Result<TrialVector> {
        let x = lu_solve(&self.matrix, &self.rhs(disc, loads)).map_err(|e| e.context("elliptic projection"))?;
        TrialVector::from_global(&disc.dofmap, &x)
    }

    /// `b(u - u_h, Theta_h phi_i)` for every free trial unknown.
    pub fn residual(&self, disc: &Discretization, loads: &[DVector<f64>], x: &[f64]) -> Result<Vec<f64>> {
        let nx = self.matrix.mul_vec(x)?;
        Ok(self.rhs(disc, loads).iter().zip(nx).map(|(r, v)| r - v).collect())
    }
}

pub fn project(disc: &Discretization, coeffs: &PdeCoefficients, exact: ExactSolution<'_>) -> Result<TrialVector> {
    let sys = ProjectionSystem::new(disc, coeffs)?;
    let loads = sys.exact_loads(disc, exact)?;
    sys.solve(disc, &loads)
}

/// Solves `[[G, B_b], [B_a^T, 0]] (v, u) = (l, 0)` in one sparse LU.
/// Returns the element-blocked test function `v_h` and the trial solution.
pub fn solve_mixed(
    disc: &Discretization,
    sys: &ProjectionSystem,
    loads: &[DVector<f64>],
) -> Result<(Vec<DVector<f64>>, TrialVector)> {
    let nt = disc.spaces.n_test();
    let n_elem = disc.mesh.n_elements();
    if loads.len() != n_elem {
        return Err(DpgError::DimensionMismatch {
            expected: n_elem,
            got: loads.len(),
        });
    }
    let offset = n_elem * nt;
    let n = offset + disc.n_dofs();
    let mut builder = TripletBuilder::new(n, n);
    let mut rhs = vec![0.0; n];
    for (k, blk) in sys.blocks.iter().enumerate() {
        let base = k * nt;
        for i in 0..nt {
            for j in 0..nt {
                builder.add(base + i, base + j, blk.gram[(i, j)]);
            }
            rhs[base + i] = loads[k][i];
        }
        for (j, d) in disc.dofmap.element_dofs(k).iter().enumerate() {
            let Some(g) = *d else { continue };
            for i in 0..nt {
                builder.add(base + i, offset + g, blk.b_b[(i, j)]);
                builder.add(offset + g, base + i, blk.b_a[(i, j)]);
            }
        }
    }
    let x = lu_solve(&builder.build(), &rhs).map_err(|e| e.context("mixed projection system"))?;
    let v = (0..n_elem)
        .map(|k| DVector::from_column_slice(&x[k * nt..(k + 1) * nt]))
        .collect();
    Ok((v, TrialVector::from_global(&disc.dofmap, &x[offset..])?))
}

pub fn project_mixed(
    disc: &Discretization,
    coeffs: &PdeCoefficients,
    exact: ExactSolution<'_>,
) -> Result<(Vec<DVector<f64>>, TrialVector)> {
    let sys = ProjectionSystem::new(disc, coeffs)?;
    let loads = sys.exact_loads(disc, exact)?;
    solve_mixed(disc, &sys, &loads)
}

/// `||v||_{V,k}` of an element-blocked test function.
pub fn test_norm(sys: &ProjectionSystem, v: &[DVector<f64>]) -> f64 {
    sys.blocks
        .iter()
        .zip(v)
        .map(|(blk, vk)| vk.dot(&(&blk.gram * vk)))
        .sum::<f64>()
        .sqrt()
}
