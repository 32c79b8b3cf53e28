//! Conforming triangulations of the unit square.
//!
//! Every element stores its vertices counterclockwise. Local edge `i` of an
//! element is the edge opposite local vertex `i`, traversed from vertex
//! `i+1` to vertex `i+2` (indices mod 3). Global edges are stored as
//! `(lo, hi)` with `lo < hi`; the global edge normal `n_e` is the clockwise
//! rotation of the unit tangent pointing from `lo` to `hi`.

use std::collections::HashMap;

use crate::{DpgError, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementEdge {
    pub edge: usize,
    /// `sign(n_K . n_e)`, either `1.0` or `-1.0`.
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub elements: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub element_edges: Vec<[ElementEdge; 3]>,
    pub boundary_vertices: Vec<bool>,
    pub boundary_edges: Vec<bool>,
    /// Elements adjacent to each edge; the second slot is empty on the boundary.
    pub edge_elements: Vec<[Option<usize>; 2]>,
    pub h_max: f64,
}

/// Local vertex pair `(from, to)` of local edge `i`.
pub const fn local_edge_vertices(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

/// `n x n` squares, each cut along the diagonal from lower-left to upper-right.
pub fn build_structured_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(DpgError::InvalidMesh(
            "structured mesh needs at least one subdivision".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    // exact endpoints so boundary detection never depends on rounding
    for v in vertices.iter_mut() {
        for c in v.iter_mut() {
            if (*c - 1.0).abs() < 1e-14 {
                *c = 1.0;
            }
        }
    }
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            elements.push([a, b, c]);
            elements.push([a, c, d]);
        }
    }
    Mesh::from_elements(vertices, elements)
}

/// Red refinement: every triangle is split into four through its edge midpoints.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.vertices.len();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(mesh.edges.iter().map(|&[a, b]| {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }));
    let mut elements = Vec::with_capacity(4 * mesh.elements.len());
    for (k, &[a, b, c]) in mesh.elements.iter().enumerate() {
        let ee = &mesh.element_edges[k];
        // local edge i is opposite vertex i
        let m_bc = nv + ee[0].edge;
        let m_ca = nv + ee[1].edge;
        let m_ab = nv + ee[2].edge;
        elements.push([a, m_ab, m_ca]);
        elements.push([m_ab, b, m_bc]);
        elements.push([m_ca, m_bc, c]);
        elements.push([m_ab, m_bc, m_ca]);
    }
    Mesh::from_elements(vertices, elements)
}

fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    /// Derives edges, orientation signs and boundary markers from a list of
    /// counterclockwise triangles.
    pub fn from_elements(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Mesh> {
        let nv = vertices.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_elements: Vec<[Option<usize>; 2]> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        let mut h_max: f64 = 0.0;

        for (k, tri) in elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(DpgError::InvalidMesh(format!(
                    "element {k} references a missing vertex"
                )));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(DpgError::DegenerateElement { element: k, area });
            }
            let mut local = [ElementEdge { edge: 0, sign: 1.0 }; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let (la, lb) = local_edge_vertices(i);
                let (va, vb) = (tri[la], tri[lb]);
                let key = (va.min(vb), va.max(vb));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_elements.push([None, None]);
                    edges.len() - 1
                });
                match edge_elements[e] {
                    [None, _] => edge_elements[e][0] = Some(k),
                    [Some(_), None] => edge_elements[e][1] = Some(k),
                    _ => {
                        return Err(DpgError::InvalidMesh(format!(
                            "edge ({}, {}) shared by more than two elements",
                            key.0, key.1
                        )))
                    }
                }
                // counterclockwise traversal lo -> hi means n_K = n_e
                *slot = ElementEdge {
                    edge: e,
                    sign: if va < vb { 1.0 } else { -1.0 },
                };
                let (pa, pb) = (vertices[va], vertices[vb]);
                h_max = h_max.max((pb[0] - pa[0]).hypot(pb[1] - pa[1]));
            }
            element_edges.push(local);
        }

        let mut boundary_edges = vec![false; edges.len()];
        let mut boundary_vertices = vec![false; nv];
        for (e, adj) in edge_elements.iter().enumerate() {
            if adj[1].is_none() {
                boundary_edges[e] = true;
                boundary_vertices[edges[e][0]] = true;
                boundary_vertices[edges[e][1]] = true;
            }
        }
        // an interior edge must be seen with opposite orientations
        for (e, adj) in edge_elements.iter().enumerate() {
            if let [Some(k1), Some(k2)] = *adj {
                let s1 = element_edges[k1].iter().find(|l| l.edge == e).unwrap().sign;
                let s2 = element_edges[k2].iter().find(|l| l.edge == e).unwrap().sign;
                if s1 == s2 {
                    return Err(DpgError::InvalidMesh(format!(
                        "elements {k1} and {k2} traverse edge {e} in the same direction"
                    )));
                }
            }
        }

        Ok(Mesh {
            vertices,
            elements,
            edges,
            element_edges,
            boundary_vertices,
            boundary_edges,
            edge_elements,
            h_max,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn element_vertices(&self, k: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn element_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_vertices(k);
        signed_area(a, b, c)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    /// Unit normal `n_e`: the tangent `lo -> hi` rotated clockwise by 90 degrees.
    pub fn edge_normal(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let (tx, ty) = (pb[0] - pa[0], pb[1] - pa[1]);
        let len = tx.hypot(ty);
        [ty / len, -tx / len]
    }

    pub fn edge_orientation_sign(&self, element: usize, local_edge: usize) -> Result<f64> {
        if element >= self.elements.len() {
            return Err(DpgError::OutOfRange {
                what: "element",
                index: element,
                len: self.elements.len(),
            });
        }
        if local_edge >= 3 {
            return Err(DpgError::OutOfRange {
                what: "local edge",
                index: local_edge,
                len: 3,
            });
        }
        Ok(self.element_edges[element][local_edge].sign)
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_edges.iter().filter(|&&b| b).count()
    }
}
