//! Nodal Lagrange bases on the reference triangle and the reference edge.
//!
//! Triangle nodes are ordered: the three vertices, then the nodes interior
//! to local edges 0, 1, 2 (edge `i` runs from vertex `i+1` to vertex `i+2`,
//! nodes listed in that direction), then interior nodes.

use nalgebra::DMatrix;

use crate::{DpgError, Point, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 3;
pub const MAX_EDGE_DEGREE: usize = 2;

const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Lagrange basis of `P^degree` on the reference triangle, stored as
/// monomial coefficients obtained by inverting the nodal Vandermonde matrix.
#[derive(Clone, Debug)]
pub struct TriangleBasis {
    degree: usize,
    nodes: Vec<Point>,
    exponents: Vec<(i32, i32)>,
    /// `coeffs[(m, i)]`: coefficient of monomial `m` in basis function `i`.
    coeffs: DMatrix<f64>,
}

pub fn triangle_nodes(degree: usize) -> Vec<Point> {
    if degree == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let mut nodes = REF_VERTICES.to_vec();
    for i in 0..3 {
        let (a, b) = (REF_VERTICES[(i + 1) % 3], REF_VERTICES[(i + 2) % 3]);
        for j in 1..degree {
            let s = j as f64 / degree as f64;
            nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    for j in 1..degree {
        for i in 1..degree - j {
            // only degree 3 reaches here, giving the centroid
            nodes.push([i as f64 / degree as f64, j as f64 / degree as f64]);
        }
    }
    nodes
}

impl TriangleBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
            return Err(DpgError::UnsupportedDegree {
                what: "triangle Lagrange basis",
                degree,
            });
        }
        let nodes = triangle_nodes(degree);
        let mut exponents = Vec::new();
        for total in 0..=degree as i32 {
            for b in 0..=total {
                exponents.push((total - b, b));
            }
        }
        let n = nodes.len();
        debug_assert_eq!(n, exponents.len());
        let vandermonde = DMatrix::from_fn(n, n, |i, m| {
            let (a, b) = exponents[m];
            nodes[i][0].powi(a) * nodes[i][1].powi(b)
        });
        let coeffs = vandermonde
            .try_inverse()
            .expect("Lagrange Vandermonde matrix is invertible");
        Ok(TriangleBasis {
            degree,
            nodes,
            exponents,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn values(&self, xi: Point) -> Vec<f64> {
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| xi[0].powi(a) * xi[1].powi(b))
            .collect();
        (0..self.dim())
            .map(|i| {
                mono.iter()
                    .enumerate()
                    .map(|(m, v)| self.coeffs[(m, i)] * v)
                    .sum()
            })
            .collect()
    }

    /// Gradients with respect to the reference coordinates.
    pub fn gradients(&self, xi: Point) -> Vec<Point> {
        let dmono: Vec<Point> = self
            .exponents
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 {
                    a as f64 * xi[0].powi(a - 1) * xi[1].powi(b)
                } else {
                    0.0
                };
                let dy = if b > 0 {
                    b as f64 * xi[0].powi(a) * xi[1].powi(b - 1)
                } else {
                    0.0
                };
                [dx, dy]
            })
            .collect();
        (0..self.dim())
            .map(|i| {
                dmono.iter().enumerate().fold([0.0, 0.0], |acc, (m, d)| {
                    let c = self.coeffs[(m, i)];
                    [acc[0] + c * d[0], acc[1] + c * d[1]]
                })
            })
            .collect()
    }

    /// Local indices of the basis functions attached to local edge `i`,
    /// including both endpoint vertices, in the edge's local direction.
    pub fn edge_closure(&self, i: usize) -> Vec<usize> {
        let interior = self.degree - 1;
        let mut out = vec![(i + 1) % 3];
        out.extend((0..interior).map(|j| 3 + i * interior + j));
        out.push((i + 2) % 3);
        out
    }
}

#[derive(Clone, Debug)]
pub struct ShapeTable {
    pub degree: usize,
    pub points: Vec<Point>,
    /// `values[q][i]`: basis function `i` at point `q`.
    pub values: Vec<Vec<f64>>,
    pub gradients: Vec<Vec<Point>>,
}

pub fn lagrange_triangle(degree: usize, points: &[Point]) -> Result<ShapeTable> {
    let basis = TriangleBasis::new(degree)?;
    Ok(ShapeTable {
        degree,
        points: points.to_vec(),
        values: points.iter().map(|&p| basis.values(p)).collect(),
        gradients: points.iter().map(|&p| basis.gradients(p)).collect(),
    })
}

/// Lagrange basis on `[0, 1]` with equispaced nodes; degree 0 is the constant.
#[derive(Clone, Copy, Debug)]
pub struct EdgeBasis {
    degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_EDGE_DEGREE {
            return Err(DpgError::UnsupportedDegree {
                what: "edge Lagrange basis",
                degree,
            });
        }
        Ok(EdgeBasis { degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        match self.degree {
            0 => vec![1.0],
            1 => vec![1.0 - t, t],
            _ => vec![
                2.0 * (t - 0.5) * (t - 1.0),
                -4.0 * t * (t - 1.0),
                2.0 * t * (t - 0.5),
            ],
        }
    }

    pub fn derivatives(&self, t: f64) -> Vec<f64> {
        match self.degree {
            0 => vec![0.0],
            1 => vec![-1.0, 1.0],
            _ => vec![4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
        }
    }
}

#[derive(Clone, Debug)]
pub struct EdgeShapeTable {
    pub degree: usize,
    pub points: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
}

pub fn lagrange_edge(degree: usize, points: &[f64]) -> Result<EdgeShapeTable> {
    let basis = EdgeBasis::new(degree)?;
    Ok(EdgeShapeTable {
        degree,
        points: points.to_vec(),
        values: points.iter().map(|&t| basis.values(t)).collect(),
        derivatives: points.iter().map(|&t| basis.derivatives(t)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_rule;
    use std::collections::BTreeMap;

    #[test]
    fn p1_barycenter() {
        let t = lagrange_triangle(1, &[[1.0 / 3.0, 1.0 / 3.0]]).unwrap();
        for v in &t.values[0] {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn nodal_property() {
        for d in 1..=3 {
            let b = TriangleBasis::new(d).unwrap();
            assert_eq!(b.dim(), (d + 1) * (d + 2) / 2);
            for (i, &node) in b.nodes().iter().enumerate() {
                for (j, v) in b.values(node).iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-13, "degree {d} node {i} fn {j}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let pts = [[0.13, 0.71], [0.42, 0.05], [0.0, 0.0], [0.3, 0.3]];
        for d in 1..=3 {
            let t = lagrange_triangle(d, &pts).unwrap();
            for q in 0..pts.len() {
                let s: f64 = t.values[q].iter().sum();
                assert!((s - 1.0).abs() < 1e-13);
                let g = t.gradients[q].iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
                assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert!(TriangleBasis::new(0).is_err());
        assert!(TriangleBasis::new(4).is_err());
        assert!(lagrange_edge(3, &[0.5]).is_err());
    }

    #[test]
    fn edge_examples() {
        let t0 = lagrange_edge(0, &[0.37]).unwrap();
        assert_eq!(t0.values[0], vec![1.0]);
        let t1 = lagrange_edge(1, &[0.5, 0.2]).unwrap();
        assert_eq!(t1.values[0], vec![0.5, 0.5]);
        assert!((t1.values[1].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let t2 = lagrange_edge(2, &[0.0, 0.5, 1.0, 0.77]).unwrap();
        for (q, expect) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].iter().enumerate() {
            assert_eq!(&t2.values[q][..], &expect[..]);
        }
        assert!((t2.values[3].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(t2.derivatives[3].iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn edge_closure_matches_nodes() {
        let b = TriangleBasis::new(3).unwrap();
        let nodes = b.nodes();
        for i in 0..3 {
            let closure = b.edge_closure(i);
            let a = nodes[closure[0]];
            let z = nodes[*closure.last().unwrap()];
            for (j, &n) in closure.iter().enumerate() {
                let s = j as f64 / 3.0;
                let p = [a[0] + s * (z[0] - a[0]), a[1] + s * (z[1] - a[1])];
                assert!((p[0] - nodes[n][0]).abs() < 1e-15 && (p[1] - nodes[n][1]).abs() < 1e-15);
            }
        }
    }

    // ---- exact oracle: barycentric polynomials with exact integration ----

    /// Polynomial in barycentric coordinates (l0, l1, l2) of the reference triangle,
    /// l0 = 1 - x - y, l1 = x, l2 = y.
    #[derive(Clone, Default)]
    struct Bary(BTreeMap<[u32; 3], f64>);

    impl Bary {
        fn lam(i: usize) -> Bary {
            let mut e = [0; 3];
            e[i] = 1;
            Bary([(e, 1.0)].into_iter().collect())
        }
        fn constant(c: f64) -> Bary {
            Bary([([0, 0, 0], c)].into_iter().collect())
        }
        fn add(&self, o: &Bary) -> Bary {
            let mut m = self.0.clone();
            for (k, v) in &o.0 {
                *m.entry(*k).or_default() += v;
            }
            Bary(m)
        }
        fn scale(&self, c: f64) -> Bary {
            Bary(self.0.iter().map(|(k, v)| (*k, v * c)).collect())
        }
        fn mul(&self, o: &Bary) -> Bary {
            let mut m = BTreeMap::new();
            for (a, x) in &self.0 {
                for (b, y) in &o.0 {
                    let e = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                    *m.entry(e).or_insert(0.0) += x * y;
                }
            }
            Bary(m)
        }
        /// d/dl_i
        fn dl(&self, i: usize) -> Bary {
            let mut m = BTreeMap::new();
            for (e, c) in &self.0 {
                if e[i] > 0 {
                    let mut f = *e;
                    f[i] -= 1;
                    *m.entry(f).or_insert(0.0) += c * e[i] as f64;
                }
            }
            Bary(m)
        }
        /// d/dx = d/dl1 - d/dl0, d/dy = d/dl2 - d/dl0
        fn dx(&self) -> Bary {
            self.dl(1).add(&self.dl(0).scale(-1.0))
        }
        fn dy(&self) -> Bary {
            self.dl(2).add(&self.dl(0).scale(-1.0))
        }
        /// exact integral over the reference triangle (area 1/2)
        fn integrate(&self) -> f64 {
            let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
            self.0
                .iter()
                .map(|(e, c)| c * fact(e[0]) * fact(e[1]) * fact(e[2]) / fact(e[0] + e[1] + e[2] + 2))
                .sum()
        }
    }

    /// Closed-form barycentric Lagrange bases in the node order of `triangle_nodes`.
    fn oracle_basis(degree: usize) -> Vec<Bary> {
        let l = |i| Bary::lam(i);
        let c = Bary::constant;
        match degree {
            1 => (0..3).map(l).collect(),
            2 => {
                let mut v: Vec<Bary> = (0..3)
                    .map(|i| l(i).mul(&l(i).scale(2.0).add(&c(-1.0))))
                    .collect();
                for i in 0..3 {
                    v.push(l((i + 1) % 3).mul(&l((i + 2) % 3)).scale(4.0));
                }
                v
            }
            3 => {
                let mut v: Vec<Bary> = (0..3)
                    .map(|i| {
                        l(i).mul(&l(i).scale(3.0).add(&c(-1.0)))
                            .mul(&l(i).scale(3.0).add(&c(-2.0)))
                            .scale(0.5)
                    })
                    .collect();
                for i in 0..3 {
                    let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                    // node at 1/3 from a is nearer a
                    v.push(l(a).mul(&l(b)).mul(&l(a).scale(3.0).add(&c(-1.0))).scale(4.5));
                    v.push(l(a).mul(&l(b)).mul(&l(b).scale(3.0).add(&c(-1.0))).scale(4.5));
                }
                v.push(l(0).mul(&l(1)).mul(&l(2)).scale(27.0));
                v
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn mass_and_stiffness_match_exact_integration() {
        for d in 1..=3 {
            let oracle = oracle_basis(d);
            let basis = TriangleBasis::new(d).unwrap();
            let rule = triangle_rule(2 * d).unwrap();
            let table = lagrange_triangle(d, &rule.points).unwrap();
            let n = basis.dim();
            for i in 0..n {
                for j in 0..n {
                    let mut mass = 0.0;
                    let mut stiff = 0.0;
                    for (q, w) in rule.weights.iter().enumerate() {
                        mass += w * table.values[q][i] * table.values[q][j];
                        let (gi, gj) = (table.gradients[q][i], table.gradients[q][j]);
                        stiff += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                    }
                    let m_exact = oracle[i].mul(&oracle[j]).integrate();
                    let k_exact = oracle[i].dx().mul(&oracle[j].dx())
                        .add(&oracle[i].dy().mul(&oracle[j].dy()))
                        .integrate();
                    assert!((mass - m_exact).abs() < 1e-12, "deg {d} mass ({i},{j})");
                    assert!((stiff - k_exact).abs() < 1e-12, "deg {d} stiffness ({i},{j})");
                }
            }
        }
    }
}
