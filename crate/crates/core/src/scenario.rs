//! Named scenarios and barycentric stability scans over three vertex metrics.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::{Economy, EquilibriumError};
use crate::freeness::{freeness_from_metric, FreenessError};
use crate::metric::{
    bipartite_metric, combine, cut_metric, discrete_metric, graph_metric, validate_metric, MetricError, MetricMatrix,
    WeightedGraph,
};
use crate::spectral::{mt_stability, SpectralError, StabilityOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Freeness(#[from] FreenessError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("duplicate country label {0:?}")]
    DuplicateLabel(String),
    #[error("{what} has length {found}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("vertex metrics have dimensions {0}, {1} and {2}")]
    DimensionMismatch(usize, usize, usize),
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
    #[error("edge profile needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Constructive description of a metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricSpec {
    Bipartite { n: usize, m: usize },
    Cut { n: usize, set: Vec<usize> },
    Discrete { n: usize },
    Graph { n: usize, edges: Vec<(usize, usize, f64)> },
    Explicit { distances: Vec<Vec<f64>> },
    Combination { terms: Vec<CombinationTerm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationTerm {
    pub coeff: f64,
    pub metric: MetricSpec,
}

/// Builds the metric described by `spec`. `tol` applies to explicit matrices.
pub fn resolve_metric(spec: &MetricSpec, tol: f64) -> Result<MetricMatrix, MetricError> {
    match spec {
        MetricSpec::Bipartite { n, m } => bipartite_metric(*n, *m),
        MetricSpec::Cut { n, set } => cut_metric(*n, set),
        MetricSpec::Discrete { n } => discrete_metric(*n),
        MetricSpec::Graph { n, edges } => graph_metric(&WeightedGraph::new(*n, edges.iter().copied())?),
        MetricSpec::Explicit { distances } => validate_metric(distances, tol),
        MetricSpec::Combination { terms } => {
            let resolved = terms
                .iter()
                .map(|term| Ok((term.coeff, resolve_metric(&term.metric, tol)?)))
                .collect::<Result<Vec<_>, MetricError>>()?;
            let refs: Vec<(f64, &MetricMatrix)> = resolved.iter().map(|(c, m)| (*c, m)).collect();
            combine(&refs)
        }
    }
}

/// A labelled economy whose friction comes from a metric spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    names: Vec<String>,
    spec: MetricSpec,
    metric: MetricMatrix,
    labor: Vec<f64>,
    eps: f64,
    t: f64,
}

impl Scenario {
    pub fn new(
        names: Vec<String>,
        spec: MetricSpec,
        labor: Vec<f64>,
        eps: f64,
        t: f64,
        tol: f64,
    ) -> Result<Self, ScenarioError> {
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|name| !seen.insert(name.as_str())) {
            return Err(ScenarioError::DuplicateLabel(dup.clone()));
        }
        let metric = resolve_metric(&spec, tol)?;
        let n = metric.len();
        if names.len() != n {
            return Err(ScenarioError::LengthMismatch {
                what: "countries",
                expected: n,
                found: names.len(),
            });
        }
        if labor.len() != n {
            return Err(ScenarioError::LengthMismatch {
                what: "labor",
                expected: n,
                found: labor.len(),
            });
        }
        let scenario = Self {
            names,
            spec,
            metric,
            labor,
            eps,
            t,
        };
        // surface economy errors (labor, eps, t) at construction
        scenario.economy()?;
        Ok(scenario)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn metric(&self) -> &MetricMatrix {
        &self.metric
    }

    pub fn labor(&self) -> &[f64] {
        &self.labor
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn economy(&self) -> Result<Economy, ScenarioError> {
        let phi = freeness_from_metric(&self.metric, self.t)?;
        Ok(Economy::new(self.labor.clone(), self.eps, phi)?)
    }
}

/// All `(i/r, j/r, k/r)` with `i + j + k = r`, ordered by `i` then `j`.
pub fn barycentric_grid(r: usize) -> Vec<[f64; 3]> {
    if r == 0 {
        return Vec::new();
    }
    let rf = r as f64;
    let mut out = Vec::with_capacity((r + 1) * (r + 2) / 2);
    for i in 0..=r {
        for j in 0..=(r - i) {
            let k = r - i - j;
            out.push([i as f64 / rf, j as f64 / rf, k as f64 / rf]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub stable: bool,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub vertices: [MetricMatrix; 3],
    pub resolution: usize,
    pub cells: Vec<GridCell>,
}

impl StabilityGrid {
    pub fn cell(&self, i: usize, j: usize) -> Option<&GridCell> {
        let r = self.resolution;
        if i + j > r {
            return None;
        }
        // rows i' < i contribute (r - i' + 1) cells each
        let offset = i * (r + 1) - i * (i.saturating_sub(1)) / 2;
        self.cells.get(offset + j)
    }
}

/// Classifies `α·M1 + β·M2 + γ·M3` on the barycentric grid of step `1/r`.
pub fn scan_triangle(
    m1: &MetricMatrix,
    m2: &MetricMatrix,
    m3: &MetricMatrix,
    r: usize,
    opts: &StabilityOptions,
) -> Result<StabilityGrid, ScenarioError> {
    if m1.len() != m2.len() || m1.len() != m3.len() {
        return Err(ScenarioError::DimensionMismatch(m1.len(), m2.len(), m3.len()));
    }
    if r == 0 {
        return Err(ScenarioError::ZeroResolution);
    }
    let cells = barycentric_grid(r)
        .into_par_iter()
        .map(|[alpha, beta, gamma]| {
            let mix = combine(&[(alpha, m1), (beta, m2), (gamma, m3)])?;
            let s = mt_stability(&mix, opts)?;
            Ok(GridCell {
                alpha,
                beta,
                gamma,
                stable: s.stable,
                index: s.index,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(StabilityGrid {
        vertices: [m1.clone(), m2.clone(), m3.clone()],
        resolution: r,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub alpha: f64,
    pub stable: bool,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProfile {
    pub points: Vec<EdgePoint>,
}

impl EdgeProfile {
    /// Smallest sampled `α` whose mixture is stable.
    pub fn first_stable(&self) -> Option<f64> {
        self.points.iter().find(|p| p.stable).map(|p| p.alpha)
    }

    /// Whether some `α` strictly between the endpoints is stable.
    pub fn stable_interior(&self) -> bool {
        self.points.iter().any(|p| p.stable && p.alpha > 0.0 && p.alpha < 1.0)
    }
}

/// Stability along `(1 − α)·from + α·to` for `α = k/(samples − 1)`.
pub fn edge_profile(
    from: &MetricMatrix,
    to: &MetricMatrix,
    samples: usize,
    opts: &StabilityOptions,
) -> Result<EdgeProfile, ScenarioError> {
    if from.len() != to.len() {
        return Err(ScenarioError::DimensionMismatch(from.len(), to.len(), to.len()));
    }
    if samples < 2 {
        return Err(ScenarioError::TooFewSamples(samples));
    }
    let last = (samples - 1) as f64;
    let points = (0..samples)
        .into_par_iter()
        .map(|k| {
            let alpha = k as f64 / last;
            let mix = combine(&[(1.0 - alpha, from), (alpha, to)])?;
            let s = mt_stability(&mix, opts)?;
            Ok(EdgePoint {
                alpha,
                stable: s.stable,
                index: s.index,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(EdgeProfile { points })
}
