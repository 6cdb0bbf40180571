//! The N-country wage equilibrium system
//!
//! ```text
//! F_i(v) = v_i − Σ_j L_j φ_ij v_j^{−ε} = 0,
//! ```
//!
//! where `v_i = ω_i^σ` is a wage parameter, `L` the immobile labour masses
//! and `ε = σ/(σ−1)` for elasticity of substitution `σ > 1`.

mod bloc;
mod solver;

pub use bloc::{
    bloc_solutions, bloc_structure, bloc_symmetric_equilibria, perverse_condition, perverse_roots,
    scalar_u_equation, BlocSolution, BlocStructure, PerverseCondition,
};
pub use solver::{
    find_all_equilibria, solve_equilibrium, EquilibriumSet, MultiStartOptions, SolverOptions, StartFailure,
    DEFAULT_SEED,
};

use thiserror::Error;

use crate::freeness::FreenessMatrix;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("economy needs at least one country")]
    Empty,
    #[error("labor mass {index} is {value}; masses must be positive and finite")]
    InvalidLabor { index: usize, value: f64 },
    #[error("epsilon = {0} must exceed 1")]
    EpsOutOfRange(f64),
    #[error("sigma = {0} must exceed 1")]
    SigmaOutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("v[{index}] = {value} is not positive")]
    NonpositiveV { index: usize, value: f64 },
    #[error("u = {0} is not positive")]
    NonpositiveU(f64),
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        best_v: Vec<f64>,
        best_residual: f64,
        iterations: usize,
    },
    #[error("all {} solver starts failed", failures.len())]
    AllStartsFailed { failures: Vec<StartFailure> },
    #[error("invalid solver options: {0}")]
    InvalidOptions(&'static str),
    #[error("|lambda_b / lambda_a| = {tau_abs} must be below 1 with lambda_a > 0 (lambda_a = {lambda_a})")]
    SpectralOrderViolation { lambda_a: f64, tau_abs: f64 },
    #[error("economy lacks the two-bloc eigenvector structure")]
    StructureMissing,
    #[error("perverse condition holds but no root of the scalar equation was bracketed")]
    RootNotBracketed,
    #[error("constructed equilibrium has residual {0:e}")]
    ResidualCheckFailed(f64),
}

/// Labour masses, elasticity parameter and trade freeness of `n` countries.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    labor: Vec<f64>,
    eps: f64,
    phi: FreenessMatrix,
    normalized: bool,
}

impl Economy {
    pub fn new(labor: Vec<f64>, eps: f64, phi: FreenessMatrix) -> Result<Self, EquilibriumError> {
        if labor.is_empty() {
            return Err(EquilibriumError::Empty);
        }
        if let Some((index, &value)) = labor.iter().enumerate().find(|(_, &l)| !(l > 0.0 && l.is_finite())) {
            return Err(EquilibriumError::InvalidLabor { index, value });
        }
        if !(eps > 1.0 && eps.is_finite()) {
            return Err(EquilibriumError::EpsOutOfRange(eps));
        }
        if phi.len() != labor.len() {
            return Err(EquilibriumError::DimensionMismatch {
                expected: labor.len(),
                found: phi.len(),
            });
        }
        let normalized = (labor.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        Ok(Self {
            labor,
            eps,
            phi,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.labor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labor.is_empty()
    }

    pub fn labor(&self) -> &[f64] {
        &self.labor
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn phi(&self) -> &FreenessMatrix {
        &self.phi
    }

    /// Whether the labour masses sum to one.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `ΦL` with `L` diagonal: entry `(i, j)` is `φ_ij L_j`.
    pub fn phi_l(&self) -> Matrix {
        Matrix::from_fn(self.len(), |i, j| self.phi.get(i, j) * self.labor[j])
    }

    /// Row sum of `ΦL` when all rows agree, i.e. when the all-ones vector is
    /// an eigenvector and a symmetric equilibrium exists.
    pub fn uniform_row_sum(&self) -> Option<f64> {
        let a = self.phi_l();
        let sums: Vec<f64> = (0..self.len()).map(|i| a.row(i).iter().sum()).collect();
        let first = sums[0];
        let scale = sums.iter().fold(1.0f64, |m, s| m.max(s.abs()));
        sums.iter().all(|s| (s - first).abs() <= 1e-10 * scale).then_some(first)
    }

    /// The same economy with another elasticity parameter.
    pub fn with_eps(&self, eps: f64) -> Result<Self, EquilibriumError> {
        Self::new(self.labor.clone(), eps, self.phi.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    /// All `v_i` equal.
    Symmetric,
    /// Non-symmetric, in an economy that also admits the symmetric solution.
    Perverse,
    General,
}

impl EquilibriumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Symmetric => "symmetric",
            Self::Perverse => "perverse",
            Self::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub v: Vec<f64>,
    /// `‖F(v)‖_∞`.
    pub residual_inf: f64,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    pub(crate) fn classify(economy: &Economy, v: Vec<f64>, residual_inf: f64) -> Self {
        let max = v.iter().copied().fold(f64::MIN, f64::max);
        let min = v.iter().copied().fold(f64::MAX, f64::min);
        let kind = if (max - min) <= 1e-6 * max {
            EquilibriumKind::Symmetric
        } else if economy.uniform_row_sum().is_some() {
            EquilibriumKind::Perverse
        } else {
            EquilibriumKind::General
        };
        Self { v, residual_inf, kind }
    }

    /// Wages `ω_i = v_i^{1/σ}`.
    pub fn wages(&self, sigma: f64) -> Result<Vec<f64>, EquilibriumError> {
        self.v.iter().map(|&v| wage_from_v(v, sigma)).collect()
    }
}

fn check_v(economy: &Economy, v: &[f64]) -> Result<(), EquilibriumError> {
    if v.len() != economy.len() {
        return Err(EquilibriumError::DimensionMismatch {
            expected: economy.len(),
            found: v.len(),
        });
    }
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite())) {
        return Err(EquilibriumError::NonpositiveV { index, value });
    }
    Ok(())
}

/// `F(v)` evaluated directly.
pub fn residual(economy: &Economy, v: &[f64]) -> Result<Vec<f64>, EquilibriumError> {
    check_v(economy, v)?;
    Ok(residual_unchecked(economy, v))
}

pub(crate) fn residual_unchecked(economy: &Economy, v: &[f64]) -> Vec<f64> {
    let eps = economy.eps;
    let pow: Vec<f64> = v
        .iter()
        .zip(&economy.labor)
        .map(|(&x, &l)| l * (-eps * x.ln()).exp())
        .collect();
    (0..v.len())
        .map(|i| {
            let demand: f64 = (0..v.len()).map(|j| economy.phi.get(i, j) * pow[j]).sum();
            v[i] - demand
        })
        .collect()
}

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `∂F_i/∂v_j = δ_ij + ε L_j φ_ij v_j^{−ε−1}`.
pub fn jacobian(economy: &Economy, v: &[f64]) -> Result<Matrix, EquilibriumError> {
    check_v(economy, v)?;
    Ok(jacobian_unchecked(economy, v))
}

pub(crate) fn jacobian_unchecked(economy: &Economy, v: &[f64]) -> Matrix {
    let eps = economy.eps;
    let col: Vec<f64> = v
        .iter()
        .zip(&economy.labor)
        .map(|(&x, &l)| eps * l * ((-eps - 1.0) * x.ln()).exp())
        .collect();
    Matrix::from_fn(v.len(), |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + economy.phi.get(i, j) * col[j]
    })
}

/// `ε = σ/(σ−1)`.
pub fn eps_from_sigma(sigma: f64) -> Result<f64, EquilibriumError> {
    if !(sigma > 1.0 && sigma.is_finite()) {
        return Err(EquilibriumError::SigmaOutOfRange(sigma));
    }
    Ok(sigma / (sigma - 1.0))
}

/// `σ = ε/(ε−1)`; the map is an involution on `(1, ∞)`.
pub fn sigma_from_eps(eps: f64) -> Result<f64, EquilibriumError> {
    if !(eps > 1.0 && eps.is_finite()) {
        return Err(EquilibriumError::EpsOutOfRange(eps));
    }
    Ok(eps / (eps - 1.0))
}

/// `ω = v^{1/σ}`.
pub fn wage_from_v(v: f64, sigma: f64) -> Result<f64, EquilibriumError> {
    if !(sigma > 1.0 && sigma.is_finite()) {
        return Err(EquilibriumError::SigmaOutOfRange(sigma));
    }
    if !(v > 0.0) {
        return Err(EquilibriumError::NonpositiveV { index: 0, value: v });
    }
    Ok(v.powf(1.0 / sigma))
}
