//! Spectral tests of trade-cost metrics.
//!
//! A pseudo-metric `M` is *Mossay–Tabuchi stable* when every member of the
//! family `Φ_t = (t^{m_ij})`, `0 < t < 1`, is positive semi-definite; its
//! *index* is the largest `t₀` with `Φ_t` PSD on `(0, t₀]`. Stability is
//! equivalent to `M` being conditionally negative semi-definite and to `M`
//! being a matrix of squared Euclidean distances. This module computes all
//! three independently so they can be checked against each other:
//!
//! * [`mt_stability`] scans `t` and bisects the first PSD failure,
//! * [`is_cnd`] inspects the spectrum of `P M P` on sum-zero vectors,
//! * [`schoenberg_embedding`] factors the Gram matrix `-½ P M P`.
//!
//! For complete bipartite metrics the spectrum of `Φ_t` is known in closed
//! form ([`bipartite_spectrum`], [`bipartite_index`]).

use rayon::prelude::*;
use thiserror::Error;

use crate::freeness::power_matrix;
use crate::linalg::{cholesky_succeeds, symmetric_eigen, Matrix};
use crate::metric::MetricMatrix;

/// Relative eigenvalue slack for PSD decisions: `λ ≥ -1e-10·max(1, ‖A‖_F)`.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Tolerance handed to [`is_cnd`] by [`mt_stable_via_schoenberg`].
pub const CND_TOL: f64 = 1e-10;

const VERIFY_POINTS: usize = 4096;
const TAIL_POINTS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("metric is not of negative type (Gram matrix eigenvalue {min_eigenvalue:e})")]
    NotNegativeType { min_eigenvalue: f64 },
    #[error("t = {0} is outside the open interval (0, 1)")]
    TOutOfRange(f64),
    #[error("PSD region is not an initial interval: Φ_t fails at t = {t} below the index {index}")]
    NonIntervalStabilityRegion { t: f64, index: f64 },
    #[error("invalid stability options: {0}")]
    InvalidOptions(&'static str),
}

/// Sorted spectrum of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub psd: bool,
}

impl SpectralReport {
    fn from_sorted(eigenvalues: Vec<f64>) -> Self {
        let norm = eigenvalues.iter().map(|l| l * l).sum::<f64>().sqrt();
        let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
        Self {
            psd: min_eigenvalue >= -psd_slack(norm),
            min_eigenvalue,
            eigenvalues,
        }
    }
}

fn psd_slack(norm: f64) -> f64 {
    PSD_REL_TOL * norm.max(1.0)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues_sym(a: &Matrix) -> Result<SpectralReport, SpectralError> {
    let asym = a.asymmetry();
    if asym > 1e-12 * a.frobenius_norm().max(1.0) {
        return Err(SpectralError::NotSymmetric(asym));
    }
    Ok(SpectralReport::from_sorted(symmetric_eigen(a).values))
}

/// Whether `c·M·c <= tol` for every `c` with `Σ c_i = 0`.
///
/// Equivalent to the largest eigenvalue of `P M P` being at most `tol`,
/// where `P` projects onto the sum-zero subspace.
pub fn is_cnd(m: &MetricMatrix, tol: f64) -> bool {
    largest_projected_eigenvalue(m) <= tol
}

fn largest_projected_eigenvalue(m: &MetricMatrix) -> f64 {
    let projected = m.matrix().double_center();
    symmetric_eigen(&projected).values.last().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    /// Number of uniformly spaced `t` values scanned in `(0, 1)`.
    pub grid_points: usize,
    /// Width of the final bisection bracket around the index.
    pub tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityResult {
    pub stable: bool,
    /// Mossay–Tabuchi index; exactly 1 when stable.
    pub index: f64,
    /// First scanned `t` at which `Φ_t` is not PSD.
    pub witness_t: Option<f64>,
    /// Smallest eigenvalue of `Φ_{witness_t}`.
    pub witness_eigenvalue: Option<f64>,
}

/// PSD test of `Φ_t` via a shifted Cholesky factorisation.
pub fn freeness_is_psd(m: &MetricMatrix, t: f64) -> bool {
    let phi = power_matrix(m, t);
    let shift = psd_slack(phi.frobenius_norm());
    cholesky_succeeds(&phi, shift)
}

/// Scan points: the uniform grid `k/(g+1)` followed by a geometric tail
/// `1 - 2^{-j}/(g+1)` that resolves indices lying above the last grid point.
fn scan_points(grid_points: usize) -> Vec<f64> {
    let step = 1.0 / (grid_points as f64 + 1.0);
    let mut ts: Vec<f64> = (1..=grid_points).map(|k| k as f64 * step).collect();
    ts.extend((1..=TAIL_POINTS).map(|j| 1.0 - step * 0.5f64.powi(j as i32)));
    ts
}

/// Mossay–Tabuchi stability and index of a pseudo-metric.
///
/// After locating the first failing scan point the index is bisected to
/// within `opts.tol`; the returned index is always a `t` at which `Φ_t`
/// passed. A dense verification pass then checks that `Φ_t` is PSD on the
/// whole of `(0, index]` and reports [`SpectralError::NonIntervalStabilityRegion`]
/// otherwise.
pub fn mt_stability(m: &MetricMatrix, opts: &StabilityOptions) -> Result<StabilityResult, SpectralError> {
    if opts.grid_points == 0 {
        return Err(SpectralError::InvalidOptions("grid_points must be positive"));
    }
    if !(opts.tol > 0.0) {
        return Err(SpectralError::InvalidOptions("tol must be positive"));
    }
    if m.len() <= 1 {
        return Ok(StabilityResult {
            stable: true,
            index: 1.0,
            witness_t: None,
            witness_eigenvalue: None,
        });
    }

    let ts = scan_points(opts.grid_points);
    let Some(first_fail) = ts.par_iter().position_first(|&t| !freeness_is_psd(m, t)) else {
        return Ok(StabilityResult {
            stable: true,
            index: 1.0,
            witness_t: None,
            witness_eigenvalue: None,
        });
    };

    let witness = ts[first_fail];
    let start = if first_fail == 0 { 0.0 } else { ts[first_fail - 1] };
    let mut index = bisect(start, witness, opts.tol, |t| freeness_is_psd(m, t));
    // The slack pushes the boundary past the true eigenvalue crossing by
    // about slack/slope. When Φ_start is safely definite, locate the
    // crossing itself; it still passes the slack test.
    if start > 0.0 && cholesky_succeeds(&power_matrix(m, start), 0.0) {
        index = bisect(start, index, opts.tol, |t| cholesky_succeeds(&power_matrix(m, t), 0.0));
    }

    let bad = (1..=VERIFY_POINTS)
        .into_par_iter()
        .map(|k| index * k as f64 / (VERIFY_POINTS as f64 + 1.0))
        .find_first(|&t| t > 0.0 && !freeness_is_psd(m, t));
    if let Some(t) = bad {
        return Err(SpectralError::NonIntervalStabilityRegion { t, index });
    }

    let witness_eigenvalue = symmetric_eigen(&power_matrix(m, witness)).values[0];
    Ok(StabilityResult {
        stable: false,
        index,
        witness_t: Some(witness),
        witness_eigenvalue: Some(witness_eigenvalue),
    })
}

/// Last passing `t` of a bisection between a passing `lo` and failing `hi`.
fn bisect(mut lo: f64, mut hi: f64, tol: f64, passes: impl Fn(f64) -> bool) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Stability decided through conditional negative semi-definiteness.
pub fn mt_stable_via_schoenberg(m: &MetricMatrix) -> bool {
    is_cnd(m, CND_TOL)
}

/// Points whose squared Euclidean distances reproduce a metric of negative type.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub points: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `max |‖x_i − x_j‖² − m_ij|` over all pairs.
    pub fn reconstruction_error(&self, m: &MetricMatrix) -> f64 {
        let n = self.points.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.squared_distance(i, j) - m.get(i, j)).abs());
            }
        }
        worst
    }
}

/// Vectors `x_i` with `m_ij = ‖x_i − x_j‖²`, from the Gram matrix `-½ P M P`.
pub fn schoenberg_embedding(m: &MetricMatrix) -> Result<Embedding, SpectralError> {
    let n = m.len();
    let centered = m.matrix().double_center();
    let gram = Matrix::from_fn(n, |i, j| -0.5 * centered[(i, j)]);
    let eig = symmetric_eigen(&gram);
    let min_eigenvalue = eig.values.first().copied().unwrap_or(0.0);
    // same decision as is_cnd(m, CND_TOL): gram = -½·PMP exactly
    if min_eigenvalue < -0.5 * CND_TOL {
        return Err(SpectralError::NotNegativeType { min_eigenvalue });
    }
    let cutoff = 1e-12 * gram.frobenius_norm().max(1.0);
    let kept: Vec<usize> = (0..n).rev().filter(|&k| eig.values[k] > cutoff).collect();
    let points = if kept.is_empty() {
        vec![vec![0.0]; n]
    } else {
        (0..n)
            .map(|i| {
                kept.iter()
                    .map(|&k| eig.vectors[(i, k)] * eig.values[k].sqrt())
                    .collect()
            })
            .collect()
    };
    Ok(Embedding { points })
}

/// Closed-form spectrum of `Φ_t` for the complete bipartite metric `K_{n,m}`.
///
/// `1 − t²` with multiplicity `n + m − 2` together with
/// `1 + (n+m−2)t²/2 ± √(4nmt² + (n−m)²t⁴)/2`.
pub fn bipartite_spectrum(n: usize, m: usize, t: f64) -> Result<SpectralReport, SpectralError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(SpectralError::TOutOfRange(t));
    }
    assert!(n >= 1 && m >= 1, "bipartite blocs must be nonempty");
    let (nf, mf) = (n as f64, m as f64);
    let t2 = t * t;
    let centre = 1.0 + 0.5 * (nf + mf - 2.0) * t2;
    let radius = 0.5 * (4.0 * nf * mf * t2 + (nf - mf).powi(2) * t2 * t2).sqrt();
    let mut eigenvalues = vec![1.0 - t2; n + m - 2];
    eigenvalues.push(centre - radius);
    eigenvalues.push(centre + radius);
    eigenvalues.sort_by(f64::total_cmp);
    Ok(SpectralReport::from_sorted(eigenvalues))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteIndex {
    pub index: f64,
    /// `(n−1)(m−1) ≤ 1`: the index formula gives no constraint below `t = 1`.
    pub always_stable: bool,
}

/// Stability index `((n−1)(m−1))^{−1/2}` of `K_{n,m}`, capped at 1.
pub fn bipartite_index(n: usize, m: usize) -> BipartiteIndex {
    let p = (n.saturating_sub(1) * m.saturating_sub(1)) as f64;
    if p <= 1.0 {
        BipartiteIndex {
            index: 1.0,
            always_stable: true,
        }
    } else {
        BipartiteIndex {
            index: 1.0 / p.sqrt(),
            always_stable: false,
        }
    }
}
