//! Error functionals.
//!
//! Field errors are integrated with the data rule of [`LocalSpaces`]. The
//! trace error is measured by the discrete dual norm
//! `sup_{v in V_h} <s - s_h, v>_S / ||v||_{V,k}`, evaluated elementwise as
//! `sqrt(sum_K r_K^T G_K^{-1} r_K)`. Because the supremum runs over the
//! discrete test space this is a lower bound for the continuous dual norm.

use nalgebra::{Cholesky, DVector};

use crate::assembly::{local_gram, Discretization, ElementGeometry, LocalSpaces, PdeCoefficients};
use crate::mesh::local_edge_vertices;
use crate::quadrature::{edge_rule, MAX_EXACT_DEGREE};
use crate::{DpgError, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldNorm {
    L2,
    H1Semi,
}

/// `||u - u_h||` or `||grad(u - u_h)||` over the whole mesh.
pub fn field_error(
    disc: &Discretization,
    field: &[f64],
    u: &dyn Fn(Point) -> f64,
    grad_u: &dyn Fn(Point) -> Point,
    mode: FieldNorm,
) -> f64 {
    weighted_field_error(disc, field, u, grad_u, mode, [[1.0, 0.0], [0.0, 1.0]])
}

/// `||A^{1/2} grad(u - u_h)||`.
pub fn energy_error(
    disc: &Discretization,
    field: &[f64],
    grad_u: &dyn Fn(Point) -> Point,
    diffusion: [[f64; 2]; 2],
) -> f64 {
    weighted_field_error(disc, field, &|_| 0.0, grad_u, FieldNorm::H1Semi, diffusion)
}

fn weighted_field_error(
    disc: &Discretization,
    field: &[f64],
    u: &dyn Fn(Point) -> f64,
    grad_u: &dyn Fn(Point) -> Point,
    mode: FieldNorm,
    a: [[f64; 2]; 2],
) -> f64 {
    let spaces = &disc.spaces;
    let mut total = 0.0;
    for k in 0..disc.mesh.n_elements() {
        let geom = disc.geometry(k);
        let local = disc.local_field(k, field);
        for (q, (&xi, &w)) in spaces.load_rule.points.iter().zip(&spaces.load_rule.weights).enumerate() {
            let x = geom.map(xi);
            let e2 = match mode {
                FieldNorm::L2 => {
                    let uh: f64 = local.iter().zip(&spaces.load_field_values[q]).map(|(c, v)| c * v).sum();
                    (u(x) - uh).powi(2)
                }
                FieldNorm::H1Semi => {
                    let mut gh = [0.0; 2];
                    for (c, g) in local.iter().zip(&spaces.load_field_grads[q]) {
                        let g = geom.grad(*g);
                        gh[0] += c * g[0];
                        gh[1] += c * g[1];
                    }
                    let g = grad_u(x);
                    let d = [g[0] - gh[0], g[1] - gh[1]];
                    d[0] * (a[0][0] * d[0] + a[0][1] * d[1]) + d[1] * (a[1][0] * d[0] + a[1][1] * d[1])
                }
            };
            total += w * geom.det * e2;
        }
    }
    total.sqrt()
}

/// Discrete dual norm of `s - s_h`, where `s = flux . n_e` on every edge and
/// `s_h` is given by trace coefficients. Tested against broken polynomials
/// of degree `test_degree` (the method uses `p + 2`).
pub fn trace_dual_error(
    disc: &Discretization,
    coeffs: &PdeCoefficients,
    trace: &[f64],
    flux: &dyn Fn(Point) -> Point,
    test_degree: usize,
) -> Result<f64> {
    let p = disc.p();
    if trace.len() != disc.dofmap.n_trace {
        return Err(DpgError::DimensionMismatch {
            expected: disc.dofmap.n_trace,
            got: trace.len(),
        });
    }
    let spaces = LocalSpaces::with_test_degree(p, test_degree)?;
    let rule = edge_rule((p + test_degree + 6).min(MAX_EXACT_DEGREE))?;
    let per_edge = p + 1;
    let mut total = 0.0;
    for k in 0..disc.mesh.n_elements() {
        let geom = disc.geometry(k);
        let mut r = DVector::zeros(spaces.n_test());
        for (i, le) in disc.mesh.element_edges[k].iter().enumerate() {
            let normal = disc.mesh.edge_normal(le.edge);
            let len = geom.edge_length(i);
            let (a, b) = local_edge_vertices(i);
            let (pa, pb) = (geom.vertices[a], geom.vertices[b]);
            let coef = &trace[le.edge * per_edge..(le.edge + 1) * per_edge];
            for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let sigma = flux(x);
                let exact = sigma[0] * normal[0] + sigma[1] * normal[1];
                let t = crate::assembly::global_edge_parameter(le.sign, s);
                let approx: f64 = coef.iter().zip(spaces.trace.values(t)).map(|(c, v)| c * v).sum();
                let vals = spaces.test.values(crate::assembly::reference_edge_point(i, s));
                let scale = le.sign * w * len * (exact - approx);
                for (m, v) in vals.iter().enumerate() {
                    r[m] += scale * v;
                }
            }
        }
        total += dual_norm_sq(geom, coeffs, &spaces, &r, k)?;
    }
    Ok(total.sqrt())
}

fn dual_norm_sq(
    geom: &ElementGeometry,
    coeffs: &PdeCoefficients,
    spaces: &LocalSpaces,
    r: &DVector<f64>,
    element: usize,
) -> Result<f64> {
    let g = local_gram(geom, coeffs, spaces);
    let chol = Cholesky::new(g).ok_or(DpgError::GramNotPositive { element })?;
    Ok(r.dot(&chol.solve(r)))
}

/// `sqrt(||A^{1/2} grad(u - u_h)||^2 + ||s - s_h||^2)` with the discrete trace norm.
pub fn triple_norm_error(
    disc: &Discretization,
    coeffs: &PdeCoefficients,
    field: &[f64],
    trace: &[f64],
    grad_u: &dyn Fn(Point) -> Point,
    flux: &dyn Fn(Point) -> Point,
) -> Result<f64> {
    let e = energy_error(disc, field, grad_u, coeffs.diffusion);
    let t = trace_dual_error(disc, coeffs, trace, flux, disc.p() + 2)?;
    Ok(e.hypot(t))
}

/// Rates `log(e_{l-1}/e_l) / log(s_{l-1}/s_l)`; `None` at the first level and
/// wherever an error or step is not positive.
pub fn eoc(errors: &[f64], steps: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for l in 1..errors.len().min(steps.len()) {
        let (e0, e1, s0, s1) = (errors[l - 1], errors[l], steps[l - 1], steps[l]);
        if e0 > 0.0 && e1 > 0.0 && s0 > 0.0 && s1 > 0.0 && s0 != s1 {
            out[l] = Some((e0 / e1).ln() / (s0 / s1).ln());
        }
    }
    out
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub level: usize,
    pub h_max: f64,
    pub k: f64,
    pub n_field: usize,
    pub n_trace: usize,
    pub err_l2: f64,
    pub err_h1_semi: f64,
    pub err_trace_dual: f64,
    pub eoc_l2: Option<f64>,
    pub eoc_h1: Option<f64>,
    pub eoc_trace: Option<f64>,
}

/// Fills the rate columns from consecutive rows, using `h_max` or `k` as the step.
pub fn fill_rates(rows: &mut [ErrorReport], by_time_step: bool) {
    let steps: Vec<f64> = rows.iter().map(|r| if by_time_step { r.k } else { r.h_max }).collect();
    let col = |f: fn(&ErrorReport) -> f64, rows: &[ErrorReport]| eoc(&rows.iter().map(f).collect::<Vec<_>>(), &steps);
    let l2 = col(|r| r.err_l2, rows);
    let h1 = col(|r| r.err_h1_semi, rows);
    let tr = col(|r| r.err_trace_dual, rows);
    for (i, r) in rows.iter_mut().enumerate() {
        r.eoc_l2 = l2[i];
        r.eoc_h1 = h1[i];
        r.eoc_trace = tr[i];
    }
}
