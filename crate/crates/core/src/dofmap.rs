//! Degrees of freedom of the trial space `P^{p+1} ∩ H^1_0  x  P^p(S)` and
//! of the broken test space `P^{p+2}`.
//!
//! Global trial vectors are laid out as `[field | trace]`. Field unknowns
//! exist only at Lagrange nodes off the boundary; trace unknowns exist on
//! every edge and are expressed in the global edge orientation.

use crate::mesh::Mesh;
use crate::{DpgError, Result};

pub const SUPPORTED_ORDERS: [usize; 2] = [0, 1];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceDof {
    /// Index into the trace block (add `n_field` for the global unknown).
    pub index: usize,
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub p: usize,
    pub n_field: usize,
    pub n_trace: usize,
    pub n_test_per_element: usize,
    /// Per element, local field node -> global field index, `None` on the boundary.
    pub element_field_dofs: Vec<Vec<Option<usize>>>,
    /// Per element, `3 (p+1)` trace unknowns ordered by local edge, then by
    /// edge basis function in the global edge parametrization.
    pub element_trace_dofs: Vec<Vec<TraceDof>>,
    pub vertex_dofs: Vec<Option<usize>>,
    pub edge_dofs: Vec<Option<usize>>,
}

impl DofMap {
    pub fn field_degree(&self) -> usize {
        self.p + 1
    }

    pub fn test_degree(&self) -> usize {
        self.p + 2
    }

    pub fn trace_degree(&self) -> usize {
        self.p
    }

    pub fn n_dofs(&self) -> usize {
        self.n_field + self.n_trace
    }

    pub fn n_local_field(&self) -> usize {
        let d = self.field_degree();
        (d + 1) * (d + 2) / 2
    }

    pub fn n_local_trace(&self) -> usize {
        3 * (self.p + 1)
    }

    /// Physical location of every global field node.
    pub fn field_node_points(&self, mesh: &Mesh) -> Vec<[f64; 2]> {
        let mut pts = vec![[0.0; 2]; self.n_field];
        for (v, d) in self.vertex_dofs.iter().enumerate() {
            if let Some(g) = d {
                pts[*g] = mesh.vertices[v];
            }
        }
        for (e, d) in self.edge_dofs.iter().enumerate() {
            if let Some(g) = d {
                let [a, b] = mesh.edges[e];
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                pts[*g] = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            }
        }
        pts
    }

    /// Global unknowns of the local trial columns `[field nodes | traces]`.
    pub fn element_dofs(&self, k: usize) -> Vec<Option<usize>> {
        let mut out = self.element_field_dofs[k].clone();
        out.extend(
            self.element_trace_dofs[k]
                .iter()
                .map(|t| Some(self.n_field + t.index)),
        );
        out
    }
}

pub fn build_dofmap(mesh: &Mesh, p: usize) -> Result<DofMap> {
    if !SUPPORTED_ORDERS.contains(&p) {
        return Err(DpgError::UnsupportedDegree {
            what: "trial order p",
            degree: p,
        });
    }
    let mut next = 0;
    let vertex_dofs: Vec<Option<usize>> = mesh
        .boundary_vertices
        .iter()
        .map(|&on_boundary| {
            (!on_boundary).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    let edge_dofs: Vec<Option<usize>> = if p == 1 {
        mesh.boundary_edges
            .iter()
            .map(|&on_boundary| {
                (!on_boundary).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    } else {
        vec![None; mesh.n_edges()]
    };
    let n_field = next;
    let per_edge = p + 1;

    let mut element_field_dofs = Vec::with_capacity(mesh.n_elements());
    let mut element_trace_dofs = Vec::with_capacity(mesh.n_elements());
    for (tri, local_edges) in mesh.elements.iter().zip(&mesh.element_edges) {
        let mut field: Vec<Option<usize>> = tri.iter().map(|&v| vertex_dofs[v]).collect();
        if p == 1 {
            field.extend(local_edges.iter().map(|l| edge_dofs[l.edge]));
        }
        element_field_dofs.push(field);
        let trace = local_edges
            .iter()
            .flat_map(|l| {
                (0..per_edge).map(move |j| TraceDof {
                    index: l.edge * per_edge + j,
                    sign: l.sign,
                })
            })
            .collect();
        element_trace_dofs.push(trace);
    }

    Ok(DofMap {
        p,
        n_field,
        n_trace: per_edge * mesh.n_edges(),
        n_test_per_element: (p + 3) * (p + 4) / 2,
        element_field_dofs,
        element_trace_dofs,
        vertex_dofs,
        edge_dofs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EdgeBasis;
    use crate::mesh::{build_structured_mesh, local_edge_vertices};

    #[test]
    fn counts_on_small_meshes() {
        let d2 = build_dofmap(&build_structured_mesh(2).unwrap(), 0).unwrap();
        assert_eq!((d2.n_field, d2.n_trace, d2.n_test_per_element), (1, 16, 6));
        let d1 = build_dofmap(&build_structured_mesh(1).unwrap(), 0).unwrap();
        assert_eq!((d1.n_field, d1.n_trace), (0, 5));
        let d2p1 = build_dofmap(&build_structured_mesh(2).unwrap(), 1).unwrap();
        assert_eq!(d2p1.n_test_per_element, 10);
        // 1 interior vertex + 8 interior edges
        assert_eq!(d2p1.n_field, 9);
        assert_eq!(d2p1.n_trace, 32);
    }

    #[test]
    fn p0_structured_formula() {
        for n in 1..7 {
            let d = build_dofmap(&build_structured_mesh(n).unwrap(), 0).unwrap();
            assert_eq!(d.n_field, (n - 1) * (n - 1));
            assert_eq!(d.n_trace, 3 * n * n + 2 * n);
            assert_eq!(d.n_test_per_element, 6);
        }
    }

    #[test]
    fn field_nodes_are_interior() {
        let mesh = build_structured_mesh(4).unwrap();
        for p in [0, 1] {
            let d = build_dofmap(&mesh, p).unwrap();
            let pts = d.field_node_points(&mesh);
            assert_eq!(pts.len(), d.n_field);
            assert!(pts.iter().all(|x| x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0));
        }
    }

    #[test]
    fn rejects_unsupported_order() {
        assert!(build_dofmap(&build_structured_mesh(2).unwrap(), 2).is_err());
    }

    #[test]
    fn boundary_field_nodes_excluded() {
        let mesh = build_structured_mesh(3).unwrap();
        let d = build_dofmap(&mesh, 1).unwrap();
        for (k, tri) in mesh.elements.iter().enumerate() {
            for (i, &v) in tri.iter().enumerate() {
                assert_eq!(d.element_field_dofs[k][i].is_none(), mesh.boundary_vertices[v]);
            }
            for i in 0..3 {
                let e = mesh.element_edges[k][i].edge;
                assert_eq!(d.element_field_dofs[k][3 + i].is_none(), mesh.boundary_edges[e]);
            }
        }
    }

    /// Physical point on local edge `i` at local parameter `s` and the
    /// global edge parameter of that point.
    fn edge_point(mesh: &Mesh, k: usize, i: usize, s: f64) -> ([f64; 2], f64) {
        let p = mesh.element_vertices(k);
        let (a, b) = local_edge_vertices(i);
        let x = [p[a][0] + s * (p[b][0] - p[a][0]), p[a][1] + s * (p[b][1] - p[a][1])];
        let [lo, hi] = mesh.edges[mesh.element_edges[k][i].edge];
        let (plo, phi) = (mesh.vertices[lo], mesh.vertices[hi]);
        let len2 = (phi[0] - plo[0]).powi(2) + (phi[1] - plo[1]).powi(2);
        let t = ((x[0] - plo[0]) * (phi[0] - plo[0]) + (x[1] - plo[1]) * (phi[1] - plo[1])) / len2;
        (x, t)
    }

    #[test]
    fn shared_edges_see_identical_trace_functions() {
        let mesh = build_structured_mesh(3).unwrap();
        let d = build_dofmap(&mesh, 1).unwrap();
        let basis = EdgeBasis::new(1).unwrap();
        for (e, adj) in mesh.edge_elements.iter().enumerate() {
            let [Some(k1), Some(k2)] = *adj else { continue };
            let li1 = mesh.element_edges[k1].iter().position(|l| l.edge == e).unwrap();
            let li2 = mesh.element_edges[k2].iter().position(|l| l.edge == e).unwrap();
            let idx1: Vec<_> = d.element_trace_dofs[k1][2 * li1..2 * li1 + 2].to_vec();
            let idx2: Vec<_> = d.element_trace_dofs[k2][2 * li2..2 * li2 + 2].to_vec();
            assert_eq!(idx1[0].index, idx2[0].index);
            assert_eq!(idx1[1].index, idx2[1].index);
            assert_eq!(idx1[0].sign, -idx2[0].sign);
            // the same physical point evaluated from both sides
            for s in [0.1, 0.5, 0.8] {
                let (x1, t1) = edge_point(&mesh, k1, li1, s);
                let (x2, t2) = edge_point(&mesh, k2, li2, 1.0 - s);
                assert!((x1[0] - x2[0]).abs() < 1e-14 && (x1[1] - x2[1]).abs() < 1e-14);
                let (v1, v2) = (basis.values(t1), basis.values(t2));
                for j in 0..2 {
                    assert!((v1[j] - v2[j]).abs() < 1e-14);
                }
            }
        }
    }
}
