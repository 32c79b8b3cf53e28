//! Gauss rules on the reference edge `[0, 1]` and the reference triangle
//! with vertices `(0,0)`, `(1,0)`, `(0,1)`.
//!
//! Triangle rules are conical products of Gauss-Legendre rules (collapsed
//! square coordinates); all weights are positive.

use crate::{DpgError, Point, Result};

/// Highest polynomial degree a rule can be requested for.
pub const MAX_EXACT_DEGREE: usize = 16;

#[derive(Clone, Debug)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

pub type EdgeRule = QuadRule<f64>;
pub type TriangleRule = QuadRule<Point>;

impl<P: Copy> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(P) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and P_{n-1}
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `exact_degree`.
pub fn edge_rule(exact_degree: usize) -> Result<EdgeRule> {
    if exact_degree > MAX_EXACT_DEGREE {
        return Err(DpgError::UnsupportedDegree {
            what: "edge quadrature",
            degree: exact_degree,
        });
    }
    Ok(unit_gauss(exact_degree))
}

fn unit_gauss(exact_degree: usize) -> EdgeRule {
    let n = exact_degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    QuadRule {
        points: x.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
        exact_degree,
    }
}

/// Rule on the reference triangle exact for polynomials of total degree `exact_degree`.
pub fn triangle_rule(exact_degree: usize) -> Result<TriangleRule> {
    if exact_degree > MAX_EXACT_DEGREE {
        return Err(DpgError::UnsupportedDegree {
            what: "triangle quadrature",
            degree: exact_degree,
        });
    }
    // x = s, y = t (1 - s); the Jacobian (1 - s) raises the degree in s by one
    let outer = unit_gauss(exact_degree + 1);
    let inner = unit_gauss(exact_degree);
    let mut points = Vec::with_capacity(outer.len() * inner.len());
    let mut weights = Vec::with_capacity(outer.len() * inner.len());
    for (s, ws) in outer.iter() {
        for (t, wt) in inner.iter() {
            points.push([s, t * (1.0 - s)]);
            weights.push(ws * wt * (1.0 - s));
        }
    }
    Ok(QuadRule {
        points,
        weights,
        exact_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of `x^a y^b` over the reference triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn triangle_rule_examples() {
        let r1 = triangle_rule(1).unwrap();
        assert!((r1.integrate(|_| 1.0) - 0.5).abs() < 1e-15);
        let r2 = triangle_rule(2).unwrap();
        assert!((r2.integrate(|p| p[0] * p[0]) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_examples() {
        let r = edge_rule(3).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.integrate(|t| t.powi(3)) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_measure() {
        for d in 0..=MAX_EXACT_DEGREE {
            let e = edge_rule(d).unwrap();
            assert!((e.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(e.weights.iter().all(|&w| w > 0.0));
            let t = triangle_rule(d).unwrap();
            assert!((t.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            assert!(t.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn exact_on_all_monomials() {
        for d in 0..=MAX_EXACT_DEGREE as u32 {
            let e = edge_rule(d as usize).unwrap();
            let t = triangle_rule(d as usize).unwrap();
            for a in 0..=d {
                let exact = 1.0 / f64::from(a + 1);
                assert!((e.integrate(|x| x.powi(a as i32)) - exact).abs() < 1e-13);
                for b in 0..=(d - a) {
                    let q = t.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!(
                        (q - monomial_integral(a, b)).abs() < 1e-13,
                        "degree {d}: x^{a} y^{b}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert!(triangle_rule(MAX_EXACT_DEGREE + 1).is_err());
        assert!(edge_rule(MAX_EXACT_DEGREE + 1).is_err());
    }
}
