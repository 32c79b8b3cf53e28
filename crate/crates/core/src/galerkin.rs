//! Standard Galerkin backward Euler for the heat equation on the conforming
//! field space. For `A = I`, `beta = 0`, `gamma = 0` the field component of the
//! DPG march coincides with this solution, which makes it a cross-check.
//!
//! Element matrices are computed here from the reference basis directly; no
//! block from [`crate::assembly`] is reused.

use crate::assembly::PdeCoefficients;
use crate::basis::TriangleBasis;
use crate::dofmap::DofMap;
use crate::linalg::{lu_solve, SparseMatrix, TripletBuilder};
use crate::mesh::Mesh;
use crate::quadrature::triangle_rule;
use crate::{DpgError, Point, Result};

#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    /// `M/k + K`
    pub step_matrix: SparseMatrix,
    pub time_step: f64,
    basis: TriangleBasis,
    load_degree: usize,
}

fn affine(v: [Point; 3]) -> ([[f64; 2]; 2], f64) {
    let j = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
    (j, j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

impl GalerkinSystem {
    pub fn new(mesh: &Mesh, dofmap: &DofMap, coeffs: &PdeCoefficients) -> Result<Self> {
        coeffs.validate()?;
        if !coeffs.is_heat() {
            return Err(DpgError::InvalidCoefficients(
                "the Galerkin cross-check only covers A = I, beta = 0, gamma = 0".into(),
            ));
        }
        let basis = TriangleBasis::new(dofmap.field_degree())?;
        let rule = triangle_rule(2 * dofmap.field_degree())?;
        let n = dofmap.n_field;
        let k = coeffs.time_step;
        let (mut m, mut a, mut s) = (
            TripletBuilder::new(n, n),
            TripletBuilder::new(n, n),
            TripletBuilder::new(n, n),
        );
        for e in 0..mesh.n_elements() {
            let (j, det) = affine(mesh.element_vertices(e));
            let inv_t = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
            let dofs = &dofmap.element_field_dofs[e];
            for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
                let vals = basis.values(xi);
                let grads: Vec<Point> = basis
                    .gradients(xi)
                    .iter()
                    .map(|g| [inv_t[0][0] * g[0] + inv_t[0][1] * g[1], inv_t[1][0] * g[0] + inv_t[1][1] * g[1]])
                    .collect();
                for (a_loc, da) in dofs.iter().enumerate() {
                    let Some(ga) = *da else { continue };
                    for (b_loc, db) in dofs.iter().enumerate() {
                        let Some(gb) = *db else { continue };
                        let mv = w * det * vals[a_loc] * vals[b_loc];
                        let kv = w * det * (grads[a_loc][0] * grads[b_loc][0] + grads[a_loc][1] * grads[b_loc][1]);
                        m.add(ga, gb, mv);
                        a.add(ga, gb, kv);
                        s.add(ga, gb, mv / k + kv);
                    }
                }
            }
        }
        Ok(GalerkinSystem {
            mass: m.build(),
            stiffness: a.build(),
            step_matrix: s.build(),
            time_step: k,
            basis,
            load_degree: 2 * (dofmap.p + 2) + 2,
        })
    }

    /// `(g, phi_i)` for every free field node.
    pub fn load(&self, mesh: &Mesh, dofmap: &DofMap, g: &dyn Fn(Point) -> f64) -> Result<Vec<f64>> {
        let rule = triangle_rule(self.load_degree)?;
        let mut out = vec![0.0; dofmap.n_field];
        for e in 0..mesh.n_elements() {
            let v = mesh.element_vertices(e);
            let (j, det) = affine(v);
            for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    v[0][0] + j[0][0] * xi[0] + j[0][1] * xi[1],
                    v[0][1] + j[1][0] * xi[0] + j[1][1] * xi[1],
                ];
                let gx = w * det * g(x);
                for (phi, d) in self.basis.values(xi).iter().zip(&dofmap.element_field_dofs[e]) {
                    if let Some(i) = d {
                        out[*i] += gx * phi;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Solves `(M/k + K) u = (f, .) + (M/k) u_prev`.
    pub fn step(&self, mesh: &Mesh, dofmap: &DofMap, f: &dyn Fn(Point) -> f64, u_prev: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.load(mesh, dofmap, f)?;
        let mu = self.mass.mul_vec(u_prev)?;
        for (r, m) in rhs.iter_mut().zip(mu) {
            *r += m / self.time_step;
        }
        lu_solve(&self.step_matrix, &rhs)
    }
}

/// Runs `n_steps` steps from `u0` (field coefficients), calling `observe`
/// with the step index and field after each.
pub fn galerkin_march(
    mesh: &Mesh,
    dofmap: &DofMap,
    coeffs: &PdeCoefficients,
    n_steps: usize,
    source: &dyn Fn(f64, Point) -> f64,
    u0: &[f64],
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    let sys = GalerkinSystem::new(mesh, dofmap, coeffs)?;
    let mut u = u0.to_vec();
    for n in 1..=n_steps {
        let t = n as f64 * coeffs.time_step;
        u = sys.step(mesh, dofmap, &|x| source(t, x), &u)?;
        observe(n, &u);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofmap::build_dofmap;
    use crate::linalg::dot;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn rejects_non_heat_coefficients() {
        let mesh = build_structured_mesh(2).unwrap();
        let d = build_dofmap(&mesh, 0).unwrap();
        let mut c = PdeCoefficients::heat(0.1, 1.0);
        c.advection = [1.0, 0.0];
        assert!(GalerkinSystem::new(&mesh, &d, &c).is_err());
    }

    #[test]
    fn zero_trajectory() {
        let mesh = build_structured_mesh(4).unwrap();
        let d = build_dofmap(&mesh, 1).unwrap();
        let c = PdeCoefficients::heat(0.1, 1.0);
        let u = galerkin_march(&mesh, &d, &c, 4, &|_, _| 0.0, &vec![0.0; d.n_field], |_, _| {}).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn homogeneous_step_dissipates_energy() {
        let mesh = build_structured_mesh(6).unwrap();
        for p in [0, 1] {
            let d = build_dofmap(&mesh, p).unwrap();
            let c = PdeCoefficients::heat(0.05, 1.0);
            let sys = GalerkinSystem::new(&mesh, &d, &c).unwrap();
            let u0: Vec<f64> = (0..d.n_field).map(|i| ((i * 17) % 9) as f64 - 4.0).collect();
            let u1 = sys.step(&mesh, &d, &|_| 0.0, &u0).unwrap();
            let m_norm = |u: &[f64]| dot(u, &sys.mass.mul_vec(u).unwrap()).sqrt();
            assert!(m_norm(&u1) <= m_norm(&u0));
            assert!(sys.mass.asymmetry() < 1e-15 && sys.stiffness.asymmetry() < 1e-13);
        }
    }

    #[test]
    fn mass_sums_to_integral_of_interior_hats() {
        // sum_ij M_ij = (sum_i phi_i, sum_j phi_j); on build(1) with p=1 there
        // is exactly one interior node (the diagonal midpoint)
        let mesh = build_structured_mesh(1).unwrap();
        let d = build_dofmap(&mesh, 1).unwrap();
        let sys = GalerkinSystem::new(&mesh, &d, &PdeCoefficients::heat(1.0, 1.0)).unwrap();
        assert_eq!(d.n_field, 1);
        // edge bubble 4 l_i l_j: int_K l_i^2 l_j^2 = 2|K| 2! 2! / 6!, two triangles of area 1/2
        let exact = 2.0 * 16.0 * (2.0 * 0.5 * 4.0 / 720.0);
        assert!((sys.mass.get(0, 0) - exact).abs() < 1e-14);
    }
}
