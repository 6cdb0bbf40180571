//! Closed-form equilibria of two-bloc economies.
//!
//! When `ΦL` has the all-ones vector `a` (eigenvalue `λ_a`) and a `±1` vector
//! `b` (eigenvalue `λ_b`) as eigenvectors, substituting `w = v^{−ε}` and
//! `w = x·a + y·b` reduces the equilibrium system to one scalar equation in
//! `u = (1 + τz)/(1 − τz)`, where `z = y/x` and `τ = λ_b/λ_a`:
//!
//! ```text
//! h(u) = u^ε + 1 + τ (u + 1)(u^ε − 1)/(u − 1) = 0.
//! ```
//!
//! `u = 1` is always a solution (the symmetric equilibrium). Since
//! `h(1) = 2 + 2τε` and `h → +∞`, a second root `u* > 1` exists whenever
//! `ετ < −1`, and `h(1/u) = u^{−ε} h(u)` supplies its bloc-swapped twin.

use super::solver::{insert_distinct, sort_lexicographic};
use super::{inf_norm, residual_unchecked, Economy, Equilibrium, EquilibriumError, EquilibriumKind};

/// Largest economy for which sign patterns are searched exhaustively.
const MAX_BLOC_SEARCH: usize = 16;
const EIGEN_TOL: f64 = 1e-10;
const RESIDUAL_CHECK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BlocStructure {
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// The `±1` eigenvector, normalised so that the first entry is `+1`.
    pub signs: Vec<i8>,
}

impl BlocStructure {
    pub fn tau(&self) -> f64 {
        self.lambda_b / self.lambda_a
    }
}

/// Detects the all-ones and `±1` eigenvectors of `ΦL`.
///
/// Sign patterns are enumerated exhaustively (economies up to 16 countries).
/// When several `±1` eigenvectors exist, the one with the smallest eigenvalue
/// is returned since it gives the most negative `τ`.
pub fn bloc_structure(economy: &Economy) -> Option<BlocStructure> {
    let n = economy.len();
    if !(2..=MAX_BLOC_SEARCH).contains(&n) {
        return None;
    }
    let lambda_a = economy.uniform_row_sum()?;
    if !(lambda_a > 0.0) {
        return None;
    }
    let a = economy.phi_l();
    let scale = lambda_a.abs().max(1.0);

    let mut found: Option<BlocStructure> = None;
    // bit k of the mask flips the sign of entry k + 1
    for mask in 1u32..(1u32 << (n - 1)) {
        let signs: Vec<f64> = (0..n)
            .map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 })
            .collect();
        let image = a.mul_vec(&signs);
        let lambda_b = image[0];
        if image
            .iter()
            .zip(&signs)
            .all(|(ab, s)| (ab - lambda_b * s).abs() <= EIGEN_TOL * scale)
            && found.as_ref().is_none_or(|f| lambda_b < f.lambda_b)
        {
            found = Some(BlocStructure {
                lambda_a,
                lambda_b,
                signs: signs.iter().map(|&s| s as i8).collect(),
            });
        }
    }
    found
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerverseCondition {
    /// `ε τ < −1`.
    pub perverse: bool,
    pub tau: f64,
}

/// `τ = λ_b/λ_a` and whether `ετ < −1` forces non-uniqueness.
pub fn perverse_condition(lambda_a: f64, lambda_b: f64, eps: f64) -> Result<PerverseCondition, EquilibriumError> {
    let tau = lambda_b / lambda_a;
    if !(lambda_a > 0.0) || !(tau.abs() < 1.0) {
        return Err(EquilibriumError::SpectralOrderViolation {
            lambda_a,
            tau_abs: tau.abs(),
        });
    }
    Ok(PerverseCondition {
        perverse: eps * tau < -1.0,
        tau,
    })
}

/// The reduced scalar equation `h(u)`, continuous through `u = 1`.
pub fn scalar_u_equation(tau: f64, eps: f64, u: f64) -> Result<f64, EquilibriumError> {
    if !(u > 0.0) {
        return Err(EquilibriumError::NonpositiveU(u));
    }
    Ok(h(tau, eps, u))
}

fn h(tau: f64, eps: f64, u: f64) -> f64 {
    let d = u - 1.0;
    if d.abs() < 1e-6 {
        // (u^ε − 1)/(u − 1) ≈ ε + ε(ε − 1)(u − 1)/2
        let ratio = eps + 0.5 * eps * (eps - 1.0) * d;
        return u.powf(eps) + 1.0 + tau * (u + 1.0) * ratio;
    }
    let log_pow = eps * u.ln();
    if log_pow + (u + 1.0).ln() > 700.0 {
        // divide through by u^ε; only the sign survives at this magnitude
        let inv = (-log_pow).exp();
        let q = (u + 1.0) / d;
        let scaled = 1.0 + inv + tau * q * (1.0 - inv);
        return if scaled >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    log_pow.exp() + 1.0 + tau * (u + 1.0) * log_pow.exp_m1() / d
}

/// Roots `u > 1` of `h`, ascending.
///
/// Sign changes are located on a geometric grid in `ln u ∈ [1e-9, 50]` and
/// refined by bisection in `ln u`.
pub fn perverse_roots(tau: f64, eps: f64) -> Result<Vec<f64>, EquilibriumError> {
    if !(tau.abs() < 1.0) {
        return Err(EquilibriumError::SpectralOrderViolation {
            lambda_a: 1.0,
            tau_abs: tau.abs(),
        });
    }
    if !(eps > 1.0) {
        return Err(EquilibriumError::EpsOutOfRange(eps));
    }
    const GRID: usize = 4000;
    let (s_min, s_max) = (1e-9f64, 50.0f64);
    let ratio = (s_max / s_min).powf(1.0 / (GRID as f64 - 1.0));
    let sign_at = |s: f64| h(tau, eps, s.exp()).signum();

    let mut roots = Vec::new();
    let mut s_prev = s_min;
    let mut sign_prev = sign_at(s_prev);
    for k in 1..GRID {
        let s = s_min * ratio.powi(k as i32);
        let sign = sign_at(s);
        if sign != sign_prev {
            let (mut lo, mut hi) = (s_prev, s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sign_at(mid) == sign_prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push((0.5 * (lo + hi)).exp());
        }
        s_prev = s;
        sign_prev = sign;
    }
    if eps * tau < -1.0 && roots.is_empty() {
        return Err(EquilibriumError::RootNotBracketed);
    }
    Ok(roots)
}

/// One solution of the reduced two-bloc system with its back-substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct BlocSolution {
    pub u: f64,
    pub z: f64,
    pub x: f64,
    pub y: f64,
    /// `w = x·a + y·b = v^{−ε}`.
    pub w: Vec<f64>,
    pub equilibrium: Equilibrium,
}

/// Every bloc-constant equilibrium: `u = 1` plus each root pair `u*, 1/u*`.
///
/// Solutions are ordered by `u` ascending.
pub fn bloc_solutions(economy: &Economy) -> Result<Vec<BlocSolution>, EquilibriumError> {
    let structure = bloc_structure(economy).ok_or(EquilibriumError::StructureMissing)?;
    let eps = economy.eps();
    let PerverseCondition { tau, .. } = perverse_condition(structure.lambda_a, structure.lambda_b, eps)?;

    let mut us = vec![1.0];
    if tau != 0.0 {
        for root in perverse_roots(tau, eps)? {
            us.push(root);
            us.push(1.0 / root);
        }
    }
    us.sort_by(f64::total_cmp);

    us.into_iter()
        .map(|u| {
            let z = if u == 1.0 { 0.0 } else { (u - 1.0) / (tau * (u + 1.0)) };
            let log_x = -((1.0 + z).ln() + eps * (structure.lambda_a * (1.0 + tau * z)).ln()) / (1.0 + eps);
            let x = log_x.exp();
            let y = z * x;
            let w: Vec<f64> = structure.signs.iter().map(|&s| x + y * f64::from(s)).collect();
            let v: Vec<f64> = w.iter().map(|wi| (-wi.ln() / eps).exp()).collect();
            let residual = inf_norm(&residual_unchecked(economy, &v));
            if !(residual < RESIDUAL_CHECK) {
                return Err(EquilibriumError::ResidualCheckFailed(residual));
            }
            let kind = if u == 1.0 {
                EquilibriumKind::Symmetric
            } else {
                EquilibriumKind::Perverse
            };
            Ok(BlocSolution {
                u,
                z,
                x,
                y,
                w,
                equilibrium: Equilibrium {
                    v,
                    residual_inf: residual,
                    kind,
                },
            })
        })
        .collect()
}

/// Bloc-constant equilibria, deduplicated and sorted like
/// [`find_all_equilibria`](super::find_all_equilibria).
pub fn bloc_symmetric_equilibria(economy: &Economy) -> Result<Vec<Equilibrium>, EquilibriumError> {
    let mut out = Vec::new();
    for s in bloc_solutions(economy)? {
        insert_distinct(&mut out, s.equilibrium, 1e-9);
    }
    sort_lexicographic(&mut out);
    Ok(out)
}
