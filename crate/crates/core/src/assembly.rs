//! Element matrices of the discrete method and their static condensation.
//!
//! For an element `K` with test basis `{psi_i}` of `P^{p+2}(K)` the code
//! builds
//!
//! - the Gram matrix `G_K` of `(v, dv)_{V,k} = (1/k)(v, dv) + (A grad v, grad dv)`,
//! - the trial-to-test matrices `B_b,K` and `B_a,K = B_b,K + (1/k) M_K`,
//!   with columns `[local field nodes | local trace functions]`.
//!
//! The optimal test functions of the trial basis are `Theta_K = G_K^{-1} B_a,K`
//! and the condensed operator is `S = sum_K B_a,K^T G_K^{-1} B_a,K`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::{EdgeBasis, TriangleBasis};
use crate::dofmap::{build_dofmap, DofMap};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{local_edge_vertices, ElementEdge, Mesh};
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule, TriangleRule};
use crate::{DpgError, Point, Result};

/// `h k^{-1/2}` above which the trace norm equivalence is no longer uniform.
pub const MESH_TIME_RATIO_WARN: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdeCoefficients {
    /// Symmetric positive definite diffusion matrix `A`.
    pub diffusion: [[f64; 2]; 2],
    pub advection: Point,
    pub reaction: f64,
    pub time_step: f64,
    pub end_time: f64,
}

impl PdeCoefficients {
    pub fn heat(time_step: f64, end_time: f64) -> Self {
        PdeCoefficients {
            diffusion: [[1.0, 0.0], [0.0, 1.0]],
            advection: [0.0, 0.0],
            reaction: 0.0,
            time_step,
            end_time,
        }
    }

    pub fn with_time_step(mut self, k: f64) -> Self {
        self.time_step = k;
        self
    }

    pub fn is_heat(&self) -> bool {
        self.diffusion == [[1.0, 0.0], [0.0, 1.0]]
            && self.advection == [0.0, 0.0]
            && self.reaction == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.diffusion;
        if (a[0][1] - a[1][0]).abs() > 1e-14 * (a[0][0].abs() + a[1][1].abs()) {
            return Err(DpgError::InvalidCoefficients("diffusion matrix is not symmetric".into()));
        }
        if !(a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0) {
            return Err(DpgError::InvalidCoefficients(
                "diffusion matrix is not positive definite".into(),
            ));
        }
        // with constant advection (beta . grad v, v) vanishes on H^1_0
        if self.reaction.is_nan() || self.reaction < 0.0 {
            return Err(DpgError::InvalidCoefficients(format!(
                "reaction coefficient must be nonnegative, got {}",
                self.reaction
            )));
        }
        if !(self.time_step > 0.0 && self.end_time > 0.0) {
            return Err(DpgError::InvalidCoefficients(
                "time step and end time must be positive".into(),
            ));
        }
        if self.time_step > self.end_time * (1.0 + 1e-12) {
            return Err(DpgError::InvalidCoefficients(format!(
                "time step {} exceeds end time {}",
                self.time_step, self.end_time
            )));
        }
        let all = [a[0][0], a[0][1], a[1][0], a[1][1], self.advection[0], self.advection[1]];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DpgError::InvalidCoefficients("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn flux(&self, grad: Point) -> Point {
        let a = self.diffusion;
        [
            a[0][0] * grad[0] + a[0][1] * grad[1],
            a[1][0] * grad[0] + a[1][1] * grad[1],
        ]
    }
}

/// Which bilinear form a trial-to-test matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    /// `b`: the spatial operator only.
    B,
    /// `a = (1/k)(u, v) + b`.
    A,
}

/// Affine map from the reference triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    /// `J^{-T}`, mapping reference gradients to physical ones.
    pub inv_t: [[f64; 2]; 2],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self> {
        Self::from_vertices(mesh.element_vertices(k)).map_err(|e| match e {
            DpgError::DegenerateElement { area, .. } => DpgError::DegenerateElement { element: k, area },
            other => other,
        })
    }

    pub fn from_vertices(vertices: [Point; 3]) -> Result<Self> {
        let [a, b, c] = vertices;
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.is_nan() || det <= 0.0 {
            return Err(DpgError::DegenerateElement {
                element: 0,
                area: 0.5 * det,
            });
        }
        let inv_t = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
        Ok(ElementGeometry {
            vertices,
            jacobian: j,
            det,
            inv_t,
        })
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, xi: Point) -> Point {
        let a = self.vertices[0];
        let j = self.jacobian;
        [
            a[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            a[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn grad(&self, g: Point) -> Point {
        let m = self.inv_t;
        [m[0][0] * g[0] + m[0][1] * g[1], m[1][0] * g[0] + m[1][1] * g[1]]
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (a, b) = local_edge_vertices(i);
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }
}

/// Reference point at local parameter `s` of local edge `i`.
pub fn reference_edge_point(i: usize, s: f64) -> Point {
    const V: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let (a, b) = local_edge_vertices(i);
    [V[a][0] + s * (V[b][0] - V[a][0]), V[a][1] + s * (V[b][1] - V[a][1])]
}

/// Global edge parameter of local parameter `s` given the orientation sign.
pub fn global_edge_parameter(sign: f64, s: f64) -> f64 {
    if sign > 0.0 {
        s
    } else {
        1.0 - s
    }
}

/// Reference bases with their values tabulated at the quadrature points.
#[derive(Clone, Debug)]
pub struct LocalSpaces {
    pub field: TriangleBasis,
    pub test: TriangleBasis,
    pub trace: EdgeBasis,
    pub volume_rule: TriangleRule,
    pub edge_rule: EdgeRule,
    /// Rule for integrands with non-polynomial data (loads, exact solutions).
    pub load_rule: TriangleRule,
    pub field_values: Vec<Vec<f64>>,
    pub field_grads: Vec<Vec<Point>>,
    pub test_values: Vec<Vec<f64>>,
    pub test_grads: Vec<Vec<Point>>,
    /// `edge_test_values[i][q][m]`: test function `m` at edge point `q` of local edge `i`.
    pub edge_test_values: [Vec<Vec<f64>>; 3],
    pub load_field_values: Vec<Vec<f64>>,
    pub load_field_grads: Vec<Vec<Point>>,
    pub load_test_values: Vec<Vec<f64>>,
    pub load_test_grads: Vec<Vec<Point>>,
    /// Field basis evaluated at the test basis nodes (embeds `P^{p+1}` into `P^{p+2}`).
    pub field_to_test: DMatrix<f64>,
}

impl LocalSpaces {
    pub fn new(p: usize) -> Result<Self> {
        Self::with_test_degree(p, p + 2)
    }

    /// Same trial spaces with a different broken test degree.
    pub fn with_test_degree(p: usize, test_degree: usize) -> Result<Self> {
        let field = TriangleBasis::new(p + 1)?;
        let test = TriangleBasis::new(test_degree)?;
        let trace = EdgeBasis::new(p)?;
        let volume_rule = triangle_rule(2 * test_degree)?;
        let edge_rule = edge_rule(p + test_degree)?;
        let load_rule = triangle_rule(2 * test_degree + 2)?;
        let edge_test_values = [0, 1, 2].map(|i| {
            edge_rule
                .points
                .iter()
                .map(|&s| test.values(reference_edge_point(i, s)))
                .collect()
        });
        let field_to_test = DMatrix::from_fn(test.dim(), field.dim(), |i, j| {
            field.values(test.nodes()[i])[j]
        });
        Ok(LocalSpaces {
            field_values: volume_rule.points.iter().map(|&x| field.values(x)).collect(),
            field_grads: volume_rule.points.iter().map(|&x| field.gradients(x)).collect(),
            test_values: volume_rule.points.iter().map(|&x| test.values(x)).collect(),
            test_grads: volume_rule.points.iter().map(|&x| test.gradients(x)).collect(),
            load_field_values: load_rule.points.iter().map(|&x| field.values(x)).collect(),
            load_field_grads: load_rule.points.iter().map(|&x| field.gradients(x)).collect(),
            load_test_values: load_rule.points.iter().map(|&x| test.values(x)).collect(),
            load_test_grads: load_rule.points.iter().map(|&x| test.gradients(x)).collect(),
            edge_test_values,
            field_to_test,
            field,
            test,
            trace,
            volume_rule,
            edge_rule,
            load_rule,
        })
    }

    pub fn n_test(&self) -> usize {
        self.test.dim()
    }

    pub fn n_local_field(&self) -> usize {
        self.field.dim()
    }

    pub fn n_local_trace(&self) -> usize {
        3 * self.trace.dim()
    }
}

/// Gram matrix of the `(.,.)_{V,k}` inner product on the test basis of one element.
pub fn local_gram(geom: &ElementGeometry, coeffs: &PdeCoefficients, spaces: &LocalSpaces) -> DMatrix<f64> {
    let n = spaces.n_test();
    let inv_k = 1.0 / coeffs.time_step;
    let mut g = DMatrix::zeros(n, n);
    for (q, &w) in spaces.volume_rule.weights.iter().enumerate() {
        let wq = w * geom.det;
        let vals = &spaces.test_values[q];
        let grads: Vec<Point> = spaces.test_grads[q].iter().map(|&r| geom.grad(r)).collect();
        let fluxes: Vec<Point> = grads.iter().map(|&gr| coeffs.flux(gr)).collect();
        for i in 0..n {
            for j in i..n {
                let v = inv_k * vals[i] * vals[j]
                    + fluxes[i][0] * grads[j][0]
                    + fluxes[i][1] * grads[j][1];
                g[(i, j)] += wq * v;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

/// Test-against-field mass block `M[i][j] = (phi_j, psi_i)_K`.
pub fn local_field_mass(geom: &ElementGeometry, spaces: &LocalSpaces) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(spaces.n_test(), spaces.n_local_field());
    for (q, &w) in spaces.volume_rule.weights.iter().enumerate() {
        let wq = w * geom.det;
        for (i, vi) in spaces.test_values[q].iter().enumerate() {
            for (j, uj) in spaces.field_values[q].iter().enumerate() {
                m[(i, j)] += wq * vi * uj;
            }
        }
    }
    m
}

/// Trial-to-test matrix of form `a` or `b` on one element. Rows: test basis;
/// columns: local field nodes, then trace functions by local edge.
pub fn local_trial_to_test(
    geom: &ElementGeometry,
    edges: &[ElementEdge; 3],
    coeffs: &PdeCoefficients,
    spaces: &LocalSpaces,
    form: Form,
) -> DMatrix<f64> {
    let nt = spaces.n_test();
    let nf = spaces.n_local_field();
    let per_edge = spaces.trace.dim();
    let mut b = DMatrix::zeros(nt, nf + 3 * per_edge);
    let mass_weight = match form {
        Form::A => 1.0 / coeffs.time_step,
        Form::B => 0.0,
    };
    let beta = coeffs.advection;
    for (q, &w) in spaces.volume_rule.weights.iter().enumerate() {
        let wq = w * geom.det;
        let test_vals = &spaces.test_values[q];
        let test_grads: Vec<Point> = spaces.test_grads[q].iter().map(|&r| geom.grad(r)).collect();
        for j in 0..nf {
            let u = spaces.field_values[q][j];
            let gu = geom.grad(spaces.field_grads[q][j]);
            let flux = coeffs.flux(gu);
            let zeroth = beta[0] * gu[0] + beta[1] * gu[1] + (coeffs.reaction + mass_weight) * u;
            for i in 0..nt {
                let gv = test_grads[i];
                b[(i, j)] += wq * (flux[0] * gv[0] + flux[1] * gv[1] + zeroth * test_vals[i]);
            }
        }
    }
    // -<sigma, v>_S restricted to dK, with sigma expressed along n_e
    for (i, edge) in edges.iter().enumerate() {
        let len = geom.edge_length(i);
        for (q, (&s, &w)) in spaces.edge_rule.points.iter().zip(&spaces.edge_rule.weights).enumerate() {
            let trace_vals = spaces.trace.values(global_edge_parameter(edge.sign, s));
            let test_vals = &spaces.edge_test_values[i][q];
            for (m, phi) in trace_vals.iter().enumerate() {
                let col = nf + i * per_edge + m;
                let scale = -edge.sign * w * len * phi;
                for r in 0..nt {
                    b[(r, col)] += scale * test_vals[r];
                }
            }
        }
    }
    b
}

/// Mesh, numbering and reference tables of one discretization level.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub spaces: LocalSpaces,
    geometry: Vec<ElementGeometry>,
}

impl Discretization {
    pub fn new(mesh: Mesh, p: usize) -> Result<Self> {
        let dofmap = build_dofmap(&mesh, p)?;
        let spaces = LocalSpaces::new(p)?;
        let geometry = (0..mesh.n_elements())
            .map(|k| ElementGeometry::new(&mesh, k))
            .collect::<Result<_>>()?;
        Ok(Discretization {
            mesh,
            dofmap,
            spaces,
            geometry,
        })
    }

    pub fn p(&self) -> usize {
        self.dofmap.p
    }

    pub fn geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    /// Local field coefficients of element `k` (boundary nodes are zero).
    pub fn local_field(&self, k: usize, field: &[f64]) -> Vec<f64> {
        self.dofmap.element_field_dofs[k]
            .iter()
            .map(|d| d.map_or(0.0, |g| field[g]))
            .collect()
    }

    /// Local trial coefficients `[field | trace]` of element `k`.
    pub fn local_trial(&self, k: usize, global: &[f64]) -> DVector<f64> {
        let dofs = self.dofmap.element_dofs(k);
        DVector::from_iterator(dofs.len(), dofs.iter().map(|d| d.map_or(0.0, |g| global[g])))
    }
}

/// Per-element data kept after condensation.
#[derive(Clone, Debug)]
pub struct ElementBlocks {
    pub gram: DMatrix<f64>,
    pub gram_chol: Cholesky<f64, Dyn>,
    pub b_a: DMatrix<f64>,
    /// Optimal test functions of the local trial basis, `G^{-1} B_a`.
    pub theta: DMatrix<f64>,
}

/// The symmetric positive definite operator `sum_K B_a^T G^{-1} B_a` on the
/// free unknowns together with the element blocks that produced it.
#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub matrix: SparseMatrix,
    pub blocks: Vec<ElementBlocks>,
    pub coeffs: PdeCoefficients,
    pub warnings: Vec<String>,
}

pub fn element_blocks(
    disc: &Discretization,
    coeffs: &PdeCoefficients,
    k: usize,
) -> Result<ElementBlocks> {
    let geom = disc.geometry(k);
    let gram = local_gram(geom, coeffs, &disc.spaces);
    let gram_chol = Cholesky::new(gram.clone()).ok_or(DpgError::GramNotPositive { element: k })?;
    let b_a = local_trial_to_test(geom, &disc.mesh.element_edges[k], coeffs, &disc.spaces, Form::A);
    let theta = gram_chol.solve(&b_a);
    Ok(ElementBlocks {
        gram,
        gram_chol,
        b_a,
        theta,
    })
}

pub fn assemble_condensed(disc: &Discretization, coeffs: &PdeCoefficients) -> Result<CondensedSystem> {
    coeffs.validate()?;
    let mut warnings = Vec::new();
    let ratio = disc.mesh.h_max / coeffs.time_step.sqrt();
    if ratio > MESH_TIME_RATIO_WARN {
        let msg = format!(
            "h k^(-1/2) = {ratio:.3} exceeds {MESH_TIME_RATIO_WARN}; trace norm equivalence constants depend on k"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let n = disc.n_dofs();
    let mut builder = TripletBuilder::new(n, n);
    let mut blocks = Vec::with_capacity(disc.mesh.n_elements());
    for k in 0..disc.mesh.n_elements() {
        let blk = element_blocks(disc, coeffs, k)?;
        let local = blk.b_a.transpose() * &blk.theta;
        let dofs = disc.dofmap.element_dofs(k);
        for (a, da) in dofs.iter().enumerate() {
            let Some(ga) = *da else { continue };
            for (b, db) in dofs.iter().enumerate() {
                let Some(gb) = *db else { continue };
                builder.add(ga, gb, local[(a, b)]);
            }
        }
        blocks.push(blk);
    }
    Ok(CondensedSystem {
        matrix: builder.build(),
        blocks,
        coeffs: *coeffs,
        warnings,
    })
}

/// Scatters local column vectors `B^T y` into a global vector over free unknowns.
pub(crate) fn scatter_add(disc: &Discretization, k: usize, local: &DVector<f64>, out: &mut [f64]) {
    for (a, d) in disc.dofmap.element_dofs(k).iter().enumerate() {
        if let Some(g) = d {
            out[*g] += local[a];
        }
    }
}

impl CondensedSystem {
    /// Local test-space loads `(g + w/k, psi_i)_K` for every element.
    pub fn local_loads(
        &self,
        disc: &Discretization,
        g: &dyn Fn(Point) -> f64,
        w_field: &[f64],
    ) -> Vec<DVector<f64>> {
        let spaces = &disc.spaces;
        let inv_k = 1.0 / self.coeffs.time_step;
        (0..disc.mesh.n_elements())
            .map(|k| {
                let geom = disc.geometry(k);
                let w_loc = disc.local_field(k, w_field);
                let mut l = DVector::zeros(spaces.n_test());
                for (q, (&xi, &w)) in spaces.load_rule.points.iter().zip(&spaces.load_rule.weights).enumerate() {
                    let wh: f64 = w_loc.iter().zip(&spaces.load_field_values[q]).map(|(c, v)| c * v).sum();
                    let val = w * geom.det * (g(geom.map(xi)) + inv_k * wh);
                    for (i, v) in spaces.load_test_values[q].iter().enumerate() {
                        l[i] += val * v;
                    }
                }
                l
            })
            .collect()
    }

    /// Right-hand side `F(g, w; Theta_h phi_i)` for every free trial unknown.
    pub fn condense_load(&self, disc: &Discretization, g: &dyn Fn(Point) -> f64, w_field: &[f64]) -> Vec<f64> {
        let mut rhs = vec![0.0; disc.n_dofs()];
        for (k, l) in self.local_loads(disc, g, w_field).iter().enumerate() {
            let local = self.blocks[k].theta.transpose() * l;
            scatter_add(disc, k, &local, &mut rhs);
        }
        rhs
    }

    /// Element-wise coefficients of `Theta_h u` in the test basis.
    pub fn apply_theta(&self, disc: &Discretization, trial: &[f64]) -> Vec<DVector<f64>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, blk)| &blk.theta * disc.local_trial(k, trial))
            .collect()
    }

    /// `||v||_{V,k}^2` of an element-blocked test function.
    pub fn test_norm_sq(&self, v: &[DVector<f64>]) -> f64 {
        self.blocks
            .iter()
            .zip(v)
            .map(|(blk, vk)| vk.dot(&(&blk.gram * vk)))
            .sum()
    }

    pub fn energy(&self, trial: &[f64]) -> f64 {
        let su = self.matrix.mul_vec(trial).expect("trial vector length");
        crate::linalg::dot(trial, &su)
    }
}
