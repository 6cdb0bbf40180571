//! Dense square-matrix kernels for the small problems this crate handles.
//!
//! Matrices here are tiny (one row per country), so everything is plain
//! row-major `Vec<f64>` storage with cubic algorithms. The symmetric
//! eigensolver is a cyclic Jacobi rotation scheme with a fixed sweep order,
//! which makes results bit-for-bit reproducible across runs and platforms
//! with the same floating point semantics.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Square real matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds an `n × n` matrix by evaluating `f(i, j)` for every entry.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Returns `None` when the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute difference between `a[i][j]` and `a[j][i]`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `P A P` with `P = I - J/n`, the projector onto sum-zero vectors.
    pub fn double_center(&self) -> Matrix {
        let n = self.n;
        let nf = n as f64;
        let row_means: Vec<f64> = (0..n).map(|i| self.row(i).iter().sum::<f64>() / nf).collect();
        let col_means: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| self[(i, j)]).sum::<f64>() / nf)
            .collect();
        let grand = row_means.iter().sum::<f64>() / nf;
        Matrix::from_fn(n, |i, j| self[(i, j)] - row_means[i] - col_means[j] + grand)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.n).map(|i| self.row(i)))
            .finish()
    }
}

/// Eigenvalues (ascending) and matching unit eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Only the upper triangle is read. Sweeps run over `(p, q)` pairs in row
/// order until the off-diagonal Frobenius norm drops below `1e-14 ‖A‖_F`.
pub fn symmetric_eigen(a: &Matrix) -> SymmetricEigen {
    let n = a.dim();
    let mut m = Matrix::from_fn(n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Matrix::identity(n);
    let threshold = 1e-14 * m.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Applies the Jacobi rotation `J(p, q, θ)` as `Jᵀ M J`, accumulating `V J`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.dim();
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Attempts a Cholesky factorisation of `A + shift·I`.
///
/// Success means every eigenvalue of `A` exceeds `-shift` (up to rounding),
/// which is the cheap form of the PSD test used in parameter scans.
pub fn cholesky_succeeds(a: &Matrix, shift: f64) -> bool {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[(j, j)] + shift;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    true
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` if a pivot falls below `1e-300` in magnitude.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.dim();
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for i in (col + 1)..n {
            let factor = m[i * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[i * n + k] -= factor * m[col * n + k];
            }
            x[i] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_is_fixed_point() {
        let a = Matrix::from_fn(3, |i, j| if i == j { [3.0, -1.0, 2.0][i] } else { 0.0 });
        let e = symmetric_eigen(&a);
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let a = Matrix::from_fn(7, |i, j| ((i * 7 + j * 3) as f64).sin() + ((j * 7 + i * 3) as f64).sin());
        let e = symmetric_eigen(&a);
        for i in 0..7 {
            for j in 0..7 {
                let r: f64 = (0..7)
                    .map(|k| e.vectors[(i, k)] * e.values[k] * e.vectors[(j, k)])
                    .sum();
                assert!((r - a[(i, j)]).abs() < 1e-12, "({i},{j}) {r} vs {}", a[(i, j)]);
            }
        }
        assert!((e.values.iter().sum::<f64>() - a.trace()).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&a);
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn cholesky_matches_sign_of_smallest_eigenvalue() {
        let pd = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let indefinite = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let singular = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(cholesky_succeeds(&pd, 0.0));
        assert!(!cholesky_succeeds(&indefinite, 1e-10));
        assert!(!cholesky_succeeds(&singular, 0.0));
        assert!(cholesky_succeeds(&singular, 1e-10));
    }

    #[test]
    fn gaussian_elimination_needs_pivoting() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let x = solve(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(solve(&Matrix::zeros(2), &[1.0, 1.0]).is_none());
    }

    #[test]
    fn double_centering_kills_constant_rows() {
        let a = Matrix::from_fn(4, |_, _| 5.0);
        assert!(a.double_center().as_slice().iter().all(|x| x.abs() < 1e-15));
    }
}
