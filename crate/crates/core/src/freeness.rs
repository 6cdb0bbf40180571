//! Freeness-of-trade matrices and their friction metrics.
//!
//! A freeness matrix Φ records the fraction of a shipped unit that survives
//! transit between two countries. Taking `-ln` entrywise turns the
//! multiplicative triangle inequality into the additive one, so every Φ has a
//! friction pseudo-metric, and every pseudo-metric `M` generates the one
//! parameter family `Φ_t = (t^{m_ij})` for `0 < t < 1`.

use thiserror::Error;

use crate::linalg::Matrix;
use crate::metric::MetricMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FreenessError {
    #[error("freeness matrix must have at least one row")]
    Empty,
    #[error("matrix is not square (row {row} has {len} entries, expected {n})")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({i},{j}) = {value} is outside (0, 1]")]
    Range { i: usize, j: usize, value: f64 },
    #[error("diagonal entry {i} is {value}, expected 1")]
    Diagonal { i: usize, value: f64 },
    #[error("phi[{i}][{j}] = {a} differs from phi[{j}][{i}] = {b}")]
    Asymmetry { i: usize, j: usize, a: f64, b: f64 },
    #[error("phi[{i}][{j}] * phi[{j}][{k}] = {product} exceeds phi[{i}][{k}] = {direct}")]
    MultiplicativeTriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        product: f64,
        direct: f64,
    },
    #[error("t = {0} is outside the open interval (0, 1)")]
    TOutOfRange(f64),
    #[error("entry ({i},{j}) underflows to zero at t = {t}")]
    Underflow { i: usize, j: usize, t: f64 },
}

/// A validated freeness-of-trade matrix.
///
/// `degenerate` is set when some off-diagonal entry equals 1 (free trade
/// between distinct countries); nondegenerate means every `φ_ij < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessMatrix {
    phi: Matrix,
    degenerate: bool,
}

impl FreenessMatrix {
    fn from_trusted(phi: Matrix) -> Self {
        let n = phi.dim();
        let degenerate = (0..n).any(|i| (0..n).any(|j| i != j && phi[(i, j)] >= 1.0));
        Self { phi, degenerate }
    }

    pub fn len(&self) -> usize {
        self.phi.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.dim() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.phi[(i, j)]
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn matrix(&self) -> &Matrix {
        &self.phi
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.phi.to_rows()
    }
}

/// The family `t ↦ Φ_t` generated by a friction metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessFamily {
    metric: MetricMatrix,
}

impl FreenessFamily {
    pub fn new(metric: MetricMatrix) -> Self {
        Self { metric }
    }

    pub fn metric(&self) -> &MetricMatrix {
        &self.metric
    }

    pub fn at(&self, t: f64) -> Result<FreenessMatrix, FreenessError> {
        freeness_from_metric(&self.metric, t)
    }
}

/// Raw `(t^{m_ij})` without range checks, for spectral scans where entries
/// may legitimately underflow at tiny `t`.
pub(crate) fn power_matrix(metric: &MetricMatrix, t: f64) -> Matrix {
    let log_t = t.ln();
    Matrix::from_fn(metric.len(), |i, j| {
        if i == j {
            1.0
        } else {
            (metric.get(i, j) * log_t).exp()
        }
    })
}

/// `Φ_t` with entries `exp(m_ij · ln t)`.
pub fn freeness_from_metric(metric: &MetricMatrix, t: f64) -> Result<FreenessMatrix, FreenessError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(FreenessError::TOutOfRange(t));
    }
    let phi = power_matrix(metric, t);
    let n = phi.dim();
    for i in 0..n {
        for j in 0..n {
            if phi[(i, j)] <= 0.0 {
                return Err(FreenessError::Underflow { i, j, t });
            }
        }
    }
    Ok(FreenessMatrix::from_trusted(phi))
}

/// The friction-of-trade metric `(-ln φ_ij)`.
pub fn friction_metric(phi: &FreenessMatrix) -> MetricMatrix {
    let n = phi.len();
    let upper = |i: usize, j: usize| -phi.get(i.min(j), i.max(j)).ln();
    let d = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { upper(i, j).max(0.0) });
    MetricMatrix::from_trusted(d)
}

/// Checks the four freeness axioms within `tol`.
pub fn validate_freeness(rows: &[Vec<f64>], tol: f64) -> Result<FreenessMatrix, FreenessError> {
    let n = rows.len();
    if n == 0 {
        return Err(FreenessError::Empty);
    }
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(FreenessError::NotSquare { row, len: r.len(), n });
    }
    let phi = Matrix::from_rows(rows).expect("squareness checked above");
    for i in 0..n {
        for j in 0..n {
            let value = phi[(i, j)];
            if !(value > 0.0 && value <= 1.0 + tol) {
                return Err(FreenessError::Range { i, j, value });
            }
        }
    }
    for i in 0..n {
        if (phi[(i, i)] - 1.0).abs() > tol {
            return Err(FreenessError::Diagonal { i, value: phi[(i, i)] });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (phi[(i, j)] - phi[(j, i)]).abs() > tol {
                return Err(FreenessError::Asymmetry {
                    i,
                    j,
                    a: phi[(i, j)],
                    b: phi[(j, i)],
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                let product = phi[(i, j)] * phi[(j, k)];
                if product > phi[(i, k)] + tol {
                    return Err(FreenessError::MultiplicativeTriangleViolation {
                        i,
                        j,
                        k,
                        product,
                        direct: phi[(i, k)],
                    });
                }
            }
        }
    }
    let phi = Matrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            (0.5 * (phi[(i, j)] + phi[(j, i)])).min(1.0)
        }
    });
    Ok(FreenessMatrix::from_trusted(phi))
}
