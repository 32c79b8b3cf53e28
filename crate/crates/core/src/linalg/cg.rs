use super::{dot, norm2, SparseMatrix};
use crate::{DpgError, Result};

pub const DEFAULT_CG_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||S x - rhs|| / ||rhs||`, recomputed from the returned iterate.
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
///
/// Converged means `||S x - rhs|| <= rel_tol ||rhs||` for the true residual.
/// A search direction with `p^T S p <= 0` aborts with
/// [`DpgError::NegativeCurvature`]; the matrix is then not positive definite.
pub fn cg_solve(s: &SparseMatrix, rhs: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(DpgError::DimensionMismatch {
            expected: n,
            got: s.ncols(),
        });
    }
    if rhs.len() != n {
        return Err(DpgError::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let b_norm = norm2(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = s
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let target = rel_tol * b_norm;

    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut sp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;

    loop {
        if iterations >= max_iter {
            let mut res = vec![0.0; n];
            s.mul_vec_into(&x, &mut res);
            let true_res = res.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            return Err(DpgError::NotConverged {
                iterations,
                residual: true_res / b_norm,
            });
        }
        s.mul_vec_into(&p, &mut sp);
        let curvature = dot(&p, &sp);
        if curvature <= 0.0 {
            return Err(DpgError::NegativeCurvature {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * sp[i];
        }
        iterations += 1;

        if norm2(&r) <= target {
            // guard against drift of the recursive residual
            s.mul_vec_into(&x, &mut sp);
            for i in 0..n {
                r[i] = rhs[i] - sp[i];
            }
            let true_res = norm2(&r);
            if true_res <= target {
                return Ok(CgOutcome {
                    x,
                    iterations,
                    relative_residual: true_res / b_norm,
                });
            }
            // restart from the true residual
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_one_iteration() {
        let s = SparseMatrix::identity(7);
        let mut e1 = vec![0.0; 7];
        e1[0] = 1.0;
        let out = cg_solve(&s, &e1, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, e1);
    }

    #[test]
    fn diagonal_two_by_two() {
        let s = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 3.0]]);
        let out = cg_solve(&s, &[2.0, 3.0], 1e-12, 10).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-15 && (out.x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20;
        let a = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let spd = a.transpose() * &a + nalgebra::DMatrix::identity(n, n);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| spd.row(i).iter().copied().collect()).collect();
        let s = SparseMatrix::from_dense(&rows);
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let out = cg_solve(&s, &rhs, 1e-12, 10 * n).unwrap();
        assert!(out.relative_residual <= 1e-12);
        let oracle = spd.lu().solve(&nalgebra::DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            assert!((oracle[i] - out.x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let s = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let err = cg_solve(&s, &[1.0, 1.0], 1e-12, 10).unwrap_err();
        assert!(matches!(err, DpgError::NegativeCurvature { .. }));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let s = SparseMatrix::from_dense(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let err = cg_solve(&s, &[1.0, 2.0, 3.0], 1e-14, 1).unwrap_err();
        assert!(matches!(err, DpgError::NotConverged { iterations: 1, .. }));
    }

    #[test]
    fn zero_rhs() {
        let out = cg_solve(&SparseMatrix::identity(3), &[0.0; 3], 1e-12, 5).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0; 3]);
    }
}
