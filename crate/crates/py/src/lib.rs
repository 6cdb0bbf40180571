//! Python bindings for `tradegeom-core`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use tradegeom_core::equilibrium::{
    bloc_symmetric_equilibria, find_all_equilibria, sigma_from_eps, Economy, Equilibrium, EquilibriumError,
    MultiStartOptions, SolverOptions, DEFAULT_SEED,
};
use tradegeom_core::freeness::freeness_from_metric;
use tradegeom_core::metric::{
    bipartite_metric, combine, cut_metric, discrete_metric, graph_metric, validate_metric, MetricMatrix,
    WeightedGraph,
};
use tradegeom_core::scenario::scan_triangle;
use tradegeom_core::spectral::{
    bipartite_index, bipartite_spectrum, eigenvalues_sym, is_cnd, mt_stability, schoenberg_embedding,
    SpectralError, CND_TOL,
};
use tradegeom_core::StabilityOptions;

create_exception!(tradegeom, TradegeomError, PyException);
create_exception!(tradegeom, NotNegativeType, TradegeomError);
create_exception!(tradegeom, NoConvergence, TradegeomError);

fn invalid(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn spectral_err(e: SpectralError) -> PyErr {
    match e {
        SpectralError::NotNegativeType { .. } => NotNegativeType::new_err(e.to_string()),
        SpectralError::NonIntervalStabilityRegion { .. } => TradegeomError::new_err(e.to_string()),
        _ => invalid(e),
    }
}

fn equilibrium_err(e: EquilibriumError) -> PyErr {
    match e {
        EquilibriumError::NoConvergence { .. } => NoConvergence::new_err(e.to_string()),
        _ => invalid(e),
    }
}

/// A validated pseudo-metric on `n` points.
#[pyclass(name = "Metric", module = "tradegeom", frozen)]
struct PyMetric(MetricMatrix);

#[pymethods]
impl PyMetric {
    #[new]
    #[pyo3(signature = (distances, tol = 1e-9))]
    fn new(distances: Vec<Vec<f64>>, tol: f64) -> PyResult<Self> {
        validate_metric(&distances, tol).map(Self).map_err(invalid)
    }

    #[staticmethod]
    fn bipartite(n: usize, m: usize) -> PyResult<Self> {
        bipartite_metric(n, m).map(Self).map_err(invalid)
    }

    #[staticmethod]
    fn cut(n: usize, set: Vec<usize>) -> PyResult<Self> {
        cut_metric(n, &set).map(Self).map_err(invalid)
    }

    #[staticmethod]
    fn discrete(n: usize) -> PyResult<Self> {
        discrete_metric(n).map(Self).map_err(invalid)
    }

    /// Shortest-path metric of a connected graph given as `(i, j, weight)` edges.
    #[staticmethod]
    fn graph(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        let g = WeightedGraph::new(n, edges).map_err(invalid)?;
        graph_metric(&g).map(Self).map_err(invalid)
    }

    /// Nonnegative combination `Σ c_k M_k` of metrics on the same points.
    #[staticmethod]
    fn combine(terms: Vec<(f64, PyRef<'_, PyMetric>)>) -> PyResult<Self> {
        let refs: Vec<(f64, &MetricMatrix)> = terms.iter().map(|(c, m)| (*c, &m.0)).collect();
        combine(&refs).map(Self).map_err(invalid)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Metric(n={})", self.0.len())
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.0.len();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) out of range for {n} points")));
        }
        Ok(self.0.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    fn scaled(&self, c: f64) -> PyResult<Self> {
        self.0.scaled(c).map(Self).map_err(invalid)
    }

    /// Freeness matrix `t^{m_ij}` as nested lists.
    fn freeness(&self, t: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(freeness_from_metric(&self.0, t).map_err(invalid)?.to_rows())
    }

    /// Ascending eigenvalues of the freeness matrix at `t`.
    fn spectrum(&self, t: f64) -> PyResult<Vec<f64>> {
        let phi = freeness_from_metric(&self.0, t).map_err(invalid)?;
        Ok(eigenvalues_sym(phi.matrix()).map_err(spectral_err)?.eigenvalues)
    }

    #[pyo3(signature = (grid_points = 1024, tol = 1e-8))]
    fn stability(&self, grid_points: usize, tol: f64) -> PyResult<Stability> {
        let s = mt_stability(&self.0, &StabilityOptions { grid_points, tol }).map_err(spectral_err)?;
        Ok(Stability {
            stable: s.stable,
            index: s.index,
            witness_t: s.witness_t,
            witness_eigenvalue: s.witness_eigenvalue,
        })
    }

    #[pyo3(signature = (tol = CND_TOL))]
    fn is_cnd(&self, tol: f64) -> bool {
        is_cnd(&self.0, tol)
    }

    /// Points `x_i` with `‖x_i − x_j‖² = m_ij`; raises `NotNegativeType` otherwise.
    fn embedding(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(schoenberg_embedding(&self.0).map_err(spectral_err)?.points)
    }
}

#[pyclass(module = "tradegeom", frozen, get_all)]
struct Stability {
    stable: bool,
    index: f64,
    witness_t: Option<f64>,
    witness_eigenvalue: Option<f64>,
}

#[pymethods]
impl Stability {
    fn __repr__(&self) -> String {
        format!("Stability(stable={}, index={})", self.stable, self.index)
    }
}

#[pyclass(name = "Equilibrium", module = "tradegeom", frozen, get_all)]
struct PyEquilibrium {
    v: Vec<f64>,
    wages: Vec<f64>,
    residual: f64,
    kind: &'static str,
}

#[pymethods]
impl PyEquilibrium {
    fn __repr__(&self) -> String {
        format!("Equilibrium(kind={:?}, v={:?})", self.kind, self.v)
    }
}

fn wrap(e: Equilibrium, sigma: f64) -> PyResult<PyEquilibrium> {
    Ok(PyEquilibrium {
        wages: e.wages(sigma).map_err(equilibrium_err)?,
        residual: e.residual_inf,
        kind: e.kind.as_str(),
        v: e.v,
    })
}

fn economy(metric: &PyMetric, labor: Vec<f64>, eps: f64, t: f64) -> PyResult<Economy> {
    let phi = freeness_from_metric(&metric.0, t).map_err(invalid)?;
    Economy::new(labor, eps, phi).map_err(equilibrium_err)
}

/// Distinct equilibria found from `starts` seeded random starting points.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (metric, labor, eps, t, starts = 50, seed = DEFAULT_SEED, tol = 1e-10))]
fn equilibria(
    py: Python<'_>,
    metric: PyRef<'_, PyMetric>,
    labor: Vec<f64>,
    eps: f64,
    t: f64,
    starts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Vec<PyEquilibrium>> {
    let economy = economy(&metric, labor, eps, t)?;
    let opts = MultiStartOptions {
        starts,
        seed,
        solver: SolverOptions {
            tol,
            ..SolverOptions::default()
        },
        ..MultiStartOptions::default()
    };
    let set = py
        .detach(|| find_all_equilibria(&economy, &opts))
        .map_err(equilibrium_err)?;
    let sigma = sigma_from_eps(eps).map_err(equilibrium_err)?;
    set.equilibria.into_iter().map(|e| wrap(e, sigma)).collect()
}

/// Bloc-constant equilibria of an economy with two-bloc structure.
#[pyfunction]
fn bloc_equilibria(metric: PyRef<'_, PyMetric>, labor: Vec<f64>, eps: f64, t: f64) -> PyResult<Vec<PyEquilibrium>> {
    let economy = economy(&metric, labor, eps, t)?;
    let sigma = sigma_from_eps(eps).map_err(equilibrium_err)?;
    bloc_symmetric_equilibria(&economy)
        .map_err(equilibrium_err)?
        .into_iter()
        .map(|e| wrap(e, sigma))
        .collect()
}

type Cell = (f64, f64, f64, bool, f64);

/// Stability over the barycentric grid of resolution `r`, as
/// `(alpha, beta, gamma, stable, index)` tuples.
#[pyfunction]
#[pyo3(signature = (m1, m2, m3, r, grid_points = 1024))]
fn scan(
    py: Python<'_>,
    m1: PyRef<'_, PyMetric>,
    m2: PyRef<'_, PyMetric>,
    m3: PyRef<'_, PyMetric>,
    r: usize,
    grid_points: usize,
) -> PyResult<Vec<Cell>> {
    let opts = StabilityOptions {
        grid_points,
        ..StabilityOptions::default()
    };
    let (a, b, c) = (&m1.0, &m2.0, &m3.0);
    let grid = py
        .detach(|| scan_triangle(a, b, c, r, &opts))
        .map_err(|e| TradegeomError::new_err(e.to_string()))?;
    Ok(grid
        .cells
        .iter()
        .map(|c| (c.alpha, c.beta, c.gamma, c.stable, c.index))
        .collect())
}

/// Closed-form index of `K_{n,m}`, 1 when the bipartite metric is stable.
#[pyfunction(name = "bipartite_index")]
fn py_bipartite_index(n: usize, m: usize) -> f64 {
    bipartite_index(n, m).index
}

#[pyfunction(name = "bipartite_spectrum")]
fn py_bipartite_spectrum(n: usize, m: usize, t: f64) -> PyResult<Vec<f64>> {
    Ok(bipartite_spectrum(n, m, t).map_err(spectral_err)?.eigenvalues)
}

#[pymodule]
fn tradegeom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyMetric>()?;
    m.add_class::<Stability>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_function(wrap_pyfunction!(equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(bloc_equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(py_bipartite_index, m)?)?;
    m.add_function(wrap_pyfunction!(py_bipartite_spectrum, m)?)?;
    m.add("TradegeomError", py.get_type::<TradegeomError>())?;
    m.add("NotNegativeType", py.get_type::<NotNegativeType>())?;
    m.add("NoConvergence", py.get_type::<NoConvergence>())?;
    Ok(())
}
