use std::collections::VecDeque;

use nalgebra::DMatrix;

use super::SparseMatrix;
use crate::{DpgError, Result};

/// Pivots below this fraction of `max |M_ij|` count as singular.
const PIVOT_TOL: f64 = 1e-14;

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &SparseMatrix) -> Vec<usize> {
    let n = m.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in m.col_indices_of_row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for a in adj.iter_mut() {
        a.sort_by_key(|&j| (degree[j], j));
    }

    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut level = vec![usize::MAX; n];
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !placed[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        // a few sweeps toward a pseudo-peripheral start node
        let mut start = seed;
        let mut depth = 0;
        for _ in 0..4 {
            let (far, d) = farthest(&adj, start, &placed, &mut level);
            if d <= depth {
                break;
            }
            depth = d;
            start = far;
        }
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !placed[w] {
                    placed[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// BFS from `start` over unplaced nodes; returns a minimum-degree node of
/// the last level and the eccentricity.
fn farthest(adj: &[Vec<usize>], start: usize, placed: &[bool], level: &mut [usize]) -> (usize, usize) {
    let mut touched = vec![start];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = (start, 0);
    while let Some(v) = queue.pop_front() {
        let lv = level[v];
        if lv > last.1 || (lv == last.1 && adj[v].len() < adj[last.0].len()) {
            last = (v, lv);
        }
        for &w in &adj[v] {
            if !placed[w] && level[w] == usize::MAX {
                level[w] = lv + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    for v in touched {
        level[v] = usize::MAX;
    }
    last
}

/// Row-major band storage holding columns `i - kl ..= i + kl + ku` of row `i`,
/// wide enough for the fill created by partial pivoting.
struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Band {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Gaussian elimination with row pivoting, applied to `b` on the fly,
    /// followed by back substitution.
    fn solve(mut self, mut b: Vec<f64>, scale: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= PIVOT_TOL * scale {
                return Err(DpgError::Singular {
                    pivot: k,
                    value: best,
                });
            }
            if piv != k {
                for j in k..=last_col {
                    let (a, c) = (self.idx(k, j), self.idx(piv, j));
                    self.data.swap(a, c);
                }
                b.swap(k, piv);
            }
            let pivot = self.data[self.idx(k, k)];
            for r in k + 1..=last_row {
                let rk = self.idx(r, k);
                let m = self.data[rk] / pivot;
                if m == 0.0 {
                    continue;
                }
                self.data[rk] = 0.0;
                let (row_k, row_r) = (self.idx(k, k + 1), self.idx(r, k + 1));
                let len = last_col - k;
                for t in 0..len {
                    self.data[row_r + t] -= m * self.data[row_k + t];
                }
                b[r] -= m * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut acc = b[i];
            for (j, xj) in x.iter().enumerate().take(last_col + 1).skip(i + 1) {
                acc -= self.data[self.idx(i, j)] * xj;
            }
            x[i] = acc / self.data[self.idx(i, i)];
        }
        Ok(x)
    }
}

/// Direct solve of a general square sparse system.
pub fn lu_solve(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DpgError::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if rhs.len() != n {
        return Err(DpgError::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let perm = reverse_cuthill_mckee(m);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0, 0);
    for i in 0..n {
        for &j in m.col_indices_of_row(i) {
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }
    let mut band = Band::new(n, kl, ku);
    for i in 0..n {
        for (j, v) in m.row(i) {
            let at = band.idx(inv[i], inv[j]);
            band.data[at] = v;
        }
    }
    let b: Vec<f64> = perm.iter().map(|&old| rhs[old]).collect();
    let y = band.solve(b, m.max_abs())?;
    let mut x = vec![0.0; n];
    for (new, &old) in perm.iter().enumerate() {
        x[old] = y[new];
    }
    Ok(x)
}

/// Direct solve of a dense square system with partial pivoting.
pub fn lu_solve_dense(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DpgError::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if rhs.len() != n {
        return Err(DpgError::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut band = Band::new(n, n - 1, n - 1);
    for i in 0..n {
        for j in 0..n {
            let at = band.idx(i, j);
            band.data[at] = m[(i, j)];
        }
    }
    band.solve(rhs.to_vec(), m.amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity() {
        let rhs = [1.0, -2.0, 3.5];
        assert_eq!(lu_solve(&SparseMatrix::identity(3), &rhs).unwrap(), rhs.to_vec());
        assert_eq!(lu_solve_dense(&DMatrix::identity(3, 3), &rhs).unwrap(), rhs.to_vec());
    }

    #[test]
    fn pivoting_needed() {
        let m = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(lu_solve(&m, &[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(lu_solve_dense(&d, &[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn singular_is_reported() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(lu_solve_dense(&d, &[1.0, 1.0]), Err(DpgError::Singular { .. })));
        let m = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(lu_solve(&m, &[1.0, 1.0]), Err(DpgError::Singular { .. })));
    }

    fn residual_ok(rows: &[Vec<f64>], x: &[f64], rhs: &[f64]) -> bool {
        let norm_m = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let norm_x = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let norm_b = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rows.iter().zip(rhs).all(|(row, b)| {
            let r: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - b;
            r.abs() <= 1e-10 * (norm_m * norm_x + norm_b)
        })
    }

    #[test]
    fn random_dense_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| rng.random_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = lu_solve(&SparseMatrix::from_dense(&rows), &rhs).unwrap();
        assert!(residual_ok(&rows, &x, &rhs));
        let dense = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let xd = lu_solve_dense(&dense, &rhs).unwrap();
        assert!(residual_ok(&rows, &xd, &rhs));
    }

    #[test]
    fn scattered_sparse_saddle_system() {
        // 2D Laplacian-like block with a zero diagonal constraint block and a
        // scrambled numbering, so both reordering and pivoting matter
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = 12;
        let n = g * g;
        let c = 5;
        let mut scramble: Vec<usize> = (0..n + c).collect();
        for i in (1..scramble.len()).rev() {
            let j = rng.random_range(0..=i);
            scramble.swap(i, j);
        }
        let mut dense = vec![vec![0.0; n + c]; n + c];
        for i in 0..g {
            for j in 0..g {
                let a = i * g + j;
                dense[a][a] = 4.0;
                if i + 1 < g {
                    dense[a][a + g] = -1.0;
                    dense[a + g][a] = -1.3;
                }
                if j + 1 < g {
                    dense[a][a + 1] = -1.0;
                    dense[a + 1][a] = -0.7;
                }
            }
        }
        for r in 0..c {
            let col = rng.random_range(0..n);
            dense[n + r][col] = 1.0;
            dense[col][n + r] = 1.0;
        }
        let mut b = TripletBuilder::new(n + c, n + c);
        let mut permuted = vec![vec![0.0; n + c]; n + c];
        for i in 0..n + c {
            for j in 0..n + c {
                if dense[i][j] != 0.0 {
                    b.add(scramble[i], scramble[j], dense[i][j]);
                    permuted[scramble[i]][scramble[j]] = dense[i][j];
                }
            }
        }
        let rhs: Vec<f64> = (0..n + c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = lu_solve(&b.build(), &rhs).unwrap();
        assert!(residual_ok(&permuted, &x, &rhs));
    }

    #[test]
    fn rcm_is_a_permutation() {
        let m = SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 1.0],
        ]);
        let mut p = reverse_cuthill_mckee(&m);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
