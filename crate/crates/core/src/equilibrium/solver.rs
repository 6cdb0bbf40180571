use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_v, inf_norm, jacobian_unchecked, residual_unchecked, Economy, Equilibrium, EquilibriumError};
use crate::linalg;

/// Seed used by [`MultiStartOptions::default`].
pub const DEFAULT_SEED: u64 = 0x7ade_6e0c;

/// Residual level at which the solver hands over to Newton's method.
const NEWTON_SWITCH: f64 = 1e-3;
const MIN_DAMPING: f64 = 1e-10;
const MIN_NEWTON_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for `‖F(v)‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial (and maximal) damping factor of the fixed-point phase.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

/// `ln G(v)` with `G_i(v) = Σ_j L_j φ_ij v_j^{−ε}`, taken as a log-sum-exp of
/// `ln(L_j φ_ij) − ε y_j` so that wild starting points cannot overflow.
struct LogMap {
    log_a: Vec<f64>,
    n: usize,
    eps: f64,
}

impl LogMap {
    fn new(economy: &Economy) -> Self {
        let n = economy.len();
        let a = economy.phi_l();
        Self {
            log_a: a.as_slice().iter().map(|x| x.ln()).collect(),
            n,
            eps: economy.eps(),
        }
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let terms = self.log_a[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(y)
                    .map(|(la, yj)| la - self.eps * yj);
                let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
                top + terms.map(|x| (x - top).exp()).sum::<f64>().ln()
            })
            .collect()
    }

    /// `‖ln G(y) − y‖_∞` together with `ln G(y)`.
    fn gap(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let g = self.apply(y);
        let r = g.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (r, g)
    }
}

/// Solves `F(v) = 0` from `v0`.
///
/// Phase one is a damped fixed-point iteration of `v ↦ G(v)` carried out on
/// `ln v` (a geometric average `v^{1−α} G(v)^α`, so iterates stay positive).
/// A step is kept when the log-gap `‖ln G(v) − ln v‖_∞` shrinks; otherwise `α`
/// is halved. After each accepted step `α` doubles back towards `damping`.
/// Once `‖F‖_∞ < 1e-3`, or when the damping collapses, Newton's method with
/// the analytic Jacobian and a backtracking line search finishes the solve.
pub fn solve_equilibrium(
    economy: &Economy,
    v0: &[f64],
    opts: &SolverOptions,
) -> Result<Equilibrium, EquilibriumError> {
    check_v(economy, v0)?;
    if !(opts.tol > 0.0) {
        return Err(EquilibriumError::InvalidOptions("tol must be positive"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(EquilibriumError::InvalidOptions("damping must lie in (0, 1]"));
    }

    let map = LogMap::new(economy);
    let mut best = Best::default();
    let mut iterations = 0;

    let mut y: Vec<f64> = v0.iter().map(|x| x.ln()).collect();
    let (mut gap, mut g) = map.gap(&y);
    let mut alpha = opts.damping;
    let mut v: Vec<f64> = v0.to_vec();

    while iterations < opts.max_iter {
        v = y.iter().map(|x| x.exp()).collect();
        let f = inf_norm(&residual_unchecked(economy, &v));
        best.offer(&v, f);
        if f < opts.tol {
            return Ok(polished(economy, v, f));
        }
        if f < NEWTON_SWITCH || alpha < MIN_DAMPING {
            break;
        }
        iterations += 1;
        let trial: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi + alpha * (gi - yi)).collect();
        let (trial_gap, trial_g) = map.gap(&trial);
        if trial_gap < gap {
            y = trial;
            gap = trial_gap;
            g = trial_g;
            alpha = (2.0 * alpha).min(opts.damping);
        } else {
            alpha *= 0.5;
        }
    }

    while iterations < opts.max_iter {
        iterations += 1;
        let f = residual_unchecked(economy, &v);
        let norm = inf_norm(&f);
        best.offer(&v, norm);
        if norm < opts.tol {
            return Ok(polished(economy, v, norm));
        }
        match newton_step(economy, &v, &f, norm) {
            Some((next, _)) => v = next,
            None => break,
        }
    }

    if best.residual < opts.tol {
        return Ok(polished(economy, best.v, best.residual));
    }
    Err(EquilibriumError::NoConvergence {
        best_v: best.v,
        best_residual: best.residual,
        iterations,
    })
}

/// One damped Newton step; `None` when the Jacobian is singular or no step
/// length in `[MIN_NEWTON_STEP, 1]` keeps `v` positive and lowers `‖F‖_∞`.
fn newton_step(economy: &Economy, v: &[f64], f: &[f64], norm: f64) -> Option<(Vec<f64>, f64)> {
    let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
    let step = linalg::solve(&jacobian_unchecked(economy, v), &rhs)?;
    let mut lambda = 1.0;
    while lambda >= MIN_NEWTON_STEP {
        let trial: Vec<f64> = v.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
        if trial.iter().all(|x| *x > 0.0 && x.is_finite()) {
            let trial_norm = inf_norm(&residual_unchecked(economy, &trial));
            if trial_norm < norm {
                return Some((trial, trial_norm));
            }
        }
        lambda *= 0.5;
    }
    None
}

/// A couple of extra Newton steps once converged, to land well inside `tol`.
fn polished(economy: &Economy, mut v: Vec<f64>, mut norm: f64) -> Equilibrium {
    for _ in 0..2 {
        let f = residual_unchecked(economy, &v);
        match newton_step(economy, &v, &f, norm) {
            Some((next, next_norm)) => (v, norm) = (next, next_norm),
            None => break,
        }
    }
    Equilibrium::classify(economy, v, norm)
}

struct Best {
    v: Vec<f64>,
    residual: f64,
}

impl Default for Best {
    fn default() -> Self {
        Self {
            v: Vec::new(),
            residual: f64::INFINITY,
        }
    }
}

impl Best {
    fn offer(&mut self, v: &[f64], residual: f64) {
        if residual < self.residual {
            self.residual = residual;
            self.v = v.to_vec();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiStartOptions {
    pub starts: usize,
    pub seed: u64,
    /// Relative `∞`-distance below which two solutions are the same.
    pub dedupe_tol: f64,
    pub solver: SolverOptions,
}

impl Default for MultiStartOptions {
    fn default() -> Self {
        Self {
            starts: 50,
            seed: DEFAULT_SEED,
            dedupe_tol: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

/// A start that did not converge, with the best point it reached.
#[derive(Debug, Clone, PartialEq)]
pub struct StartFailure {
    pub start: usize,
    pub v0: Vec<f64>,
    pub best_v: Vec<f64>,
    pub best_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet {
    /// Distinct equilibria, lexicographically sorted by `v`.
    pub equilibria: Vec<Equilibrium>,
    /// Number of starts that converged.
    pub converged: usize,
    pub failures: Vec<StartFailure>,
}

/// Starting point `k`: each coordinate log-uniform on `[1e-3, 1e3]`, drawn
/// from its own ChaCha stream so results do not depend on scheduling.
pub(crate) fn start_point(seed: u64, start: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect()
}

pub(crate) fn relative_distance(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / inf_norm(a).max(inf_norm(b))
}

/// Adds `eq` unless an equilibrium within `tol` is already present.
pub(crate) fn insert_distinct(set: &mut Vec<Equilibrium>, eq: Equilibrium, tol: f64) {
    if !set.iter().any(|e| relative_distance(&e.v, &eq.v) < tol) {
        set.push(eq);
    }
}

pub(crate) fn sort_lexicographic(set: &mut [Equilibrium]) {
    set.sort_by(|a, b| {
        a.v.iter()
            .zip(&b.v)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Multi-start search for every equilibrium reachable from random starts.
pub fn find_all_equilibria(economy: &Economy, opts: &MultiStartOptions) -> Result<EquilibriumSet, EquilibriumError> {
    if opts.starts == 0 {
        return Err(EquilibriumError::InvalidOptions("starts must be positive"));
    }
    let n = economy.len();
    let outcomes: Vec<(Vec<f64>, Result<Equilibrium, EquilibriumError>)> = (0..opts.starts)
        .into_par_iter()
        .map(|k| {
            let v0 = start_point(opts.seed, k, n);
            let outcome = solve_equilibrium(economy, &v0, &opts.solver);
            (v0, outcome)
        })
        .collect();

    let mut equilibria = Vec::new();
    let mut failures = Vec::new();
    let mut converged = 0;
    for (start, (v0, outcome)) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(eq) => {
                converged += 1;
                insert_distinct(&mut equilibria, eq, opts.dedupe_tol);
            }
            Err(EquilibriumError::NoConvergence {
                best_v, best_residual, ..
            }) => failures.push(StartFailure {
                start,
                v0,
                best_v,
                best_residual,
            }),
            Err(other) => return Err(other),
        }
    }
    if converged == 0 {
        return Err(EquilibriumError::AllStartsFailed { failures });
    }
    sort_lexicographic(&mut equilibria);
    Ok(EquilibriumSet {
        equilibria,
        converged,
        failures,
    })
}
