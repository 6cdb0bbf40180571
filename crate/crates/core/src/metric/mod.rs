//! Pseudo-metrics on `n` labelled points and the canonical families used to
//! describe trade networks: two anti-bloc (complete bipartite) metrics, cut
//! pseudo-metrics, the discrete metric and graph shortest-path metrics.

mod graph;

pub use graph::{Edge, WeightedGraph};

use thiserror::Error;

use crate::linalg::Matrix;

/// Triangle-inequality slack used for matrices this crate constructs itself.
pub const CONSTRUCTED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric must have at least one point")]
    Empty,
    #[error("matrix is not square (row {row} has {len} entries, expected {n})")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({i},{j}) is not finite")]
    NotFinite { i: usize, j: usize },
    #[error("diagonal entry {i} is {value}, expected 0")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("entry ({i},{j}) is negative: {value}")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("d[{i}][{j}] = {a} differs from d[{j}][{i}] = {b}")]
    Asymmetry { i: usize, j: usize, a: f64, b: f64 },
    #[error("triangle inequality fails: d[{i}][{j}] = {direct} > d[{i}][{k}] + d[{k}][{j}] = {detour}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        direct: f64,
        detour: f64,
    },
    #[error("dimension mismatch: expected {expected} points, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("combination has no positive coefficient")]
    AllZeroCombination,
    #[error("combination coefficient {0} is negative or not finite")]
    NegativeCoefficient(f64),
    #[error("cut set must be a nonempty proper subset of 0..{n}")]
    EmptyOrFullCut { n: usize },
    #[error("point index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("edge ({i},{j}) references a vertex outside 0..{n}")]
    VertexOutOfRange { i: usize, j: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({i},{j}) has non-positive or non-finite weight {w}")]
    BadWeight { i: usize, j: usize, w: f64 },
    #[error("duplicate edge between {i} and {j}")]
    DuplicateEdge { i: usize, j: usize },
    #[error("graph is disconnected: components {components:?}")]
    DisconnectedGraph { components: Vec<Vec<usize>> },
}

/// A validated pseudo-metric on points `0..n`.
///
/// `degenerate` is set when two distinct points sit at distance zero, which is
/// how cut pseudo-metrics and their mixtures are represented.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    d: Matrix,
    degenerate: bool,
}

impl MetricMatrix {
    /// Wraps a matrix already known to satisfy the pseudo-metric axioms.
    pub(crate) fn from_trusted(d: Matrix) -> Self {
        let n = d.dim();
        let degenerate = (0..n).any(|i| (0..n).any(|j| i != j && d[(i, j)] == 0.0));
        Self { d, degenerate }
    }

    /// Builds from a generator and checks it at [`CONSTRUCTED_TOL`].
    fn constructed(n: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        let d = Matrix::from_fn(n, f);
        check_axioms(&d, CONSTRUCTED_TOL).expect("generated family violates metric axioms");
        Self::from_trusted(d)
    }

    pub fn len(&self) -> usize {
        self.d.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.d.dim() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn matrix(&self) -> &Matrix {
        &self.d
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.d.to_rows()
    }

    /// Largest entry; zero for the all-zero pseudo-metric.
    pub fn diameter(&self) -> f64 {
        self.d.as_slice().iter().copied().fold(0.0, f64::max)
    }

    /// `c · M` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self, MetricError> {
        combine(&[(c, self)])
    }
}

/// Checks the pseudo-metric axioms of a square matrix within `tol`.
pub fn validate_metric(rows: &[Vec<f64>], tol: f64) -> Result<MetricMatrix, MetricError> {
    let n = rows.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(MetricError::NotSquare { row, len: r.len(), n });
    }
    let d = Matrix::from_rows(rows).expect("squareness checked above");
    check_axioms(&d, tol)?;
    // accepted within tol; store the exactly symmetric, zero-diagonal version
    let d = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { 0.5 * (d[(i, j)] + d[(j, i)]) });
    Ok(MetricMatrix::from_trusted(d))
}

fn check_axioms(d: &Matrix, tol: f64) -> Result<(), MetricError> {
    let n = d.dim();
    for i in 0..n {
        for j in 0..n {
            if !d[(i, j)].is_finite() {
                return Err(MetricError::NotFinite { i, j });
            }
        }
    }
    for i in 0..n {
        if d[(i, i)].abs() > tol {
            return Err(MetricError::NonzeroDiagonal { i, value: d[(i, i)] });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if d[(i, j)] < -tol {
                return Err(MetricError::NegativeDistance { i, j, value: d[(i, j)] });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (d[(i, j)] - d[(j, i)]).abs() > tol {
                return Err(MetricError::Asymmetry {
                    i,
                    j,
                    a: d[(i, j)],
                    b: d[(j, i)],
                });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let detour = d[(i, k)] + d[(k, j)];
                if d[(i, j)] > detour + tol {
                    return Err(MetricError::TriangleViolation {
                        i,
                        j,
                        k,
                        direct: d[(i, j)],
                        detour,
                    });
                }
            }
        }
    }
    Ok(())
}

/// The complete bipartite metric `K_{n,m}`: distance 1 across the two
/// blocs `0..n` and `n..n+m`, distance 2 between distinct points of a bloc.
pub fn bipartite_metric(n: usize, m: usize) -> Result<MetricMatrix, MetricError> {
    if n == 0 || m == 0 {
        return Err(MetricError::Empty);
    }
    Ok(MetricMatrix::constructed(n + m, |i, j| {
        if i == j {
            0.0
        } else if (i < n) == (j < n) {
            2.0
        } else {
            1.0
        }
    }))
}

/// Cut pseudo-metric: distance 1 between `set` and its complement, 0 otherwise.
pub fn cut_metric(n: usize, set: &[usize]) -> Result<MetricMatrix, MetricError> {
    if let Some(&index) = set.iter().find(|&&s| s >= n) {
        return Err(MetricError::IndexOutOfRange { index, n });
    }
    let mut member = vec![false; n];
    for &s in set {
        member[s] = true;
    }
    let size = member.iter().filter(|&&b| b).count();
    if size == 0 || size == n {
        return Err(MetricError::EmptyOrFullCut { n });
    }
    Ok(MetricMatrix::constructed(n, |i, j| {
        if member[i] != member[j] {
            1.0
        } else {
            0.0
        }
    }))
}

/// The discrete metric: every pair of distinct points at distance 1.
pub fn discrete_metric(n: usize) -> Result<MetricMatrix, MetricError> {
    if n == 0 {
        return Err(MetricError::Empty);
    }
    Ok(MetricMatrix::constructed(n, |i, j| if i == j { 0.0 } else { 1.0 }))
}

/// Nonnegative linear combination `Σ cₖ Mₖ`, revalidated after summation.
pub fn combine(terms: &[(f64, &MetricMatrix)]) -> Result<MetricMatrix, MetricError> {
    let Some((_, first)) = terms.first() else {
        return Err(MetricError::AllZeroCombination);
    };
    let n = first.len();
    for &(c, m) in terms {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(MetricError::NegativeCoefficient(c));
        }
        if m.len() != n {
            return Err(MetricError::DimensionMismatch {
                expected: n,
                found: m.len(),
            });
        }
    }
    if terms.iter().all(|&(c, _)| c == 0.0) {
        return Err(MetricError::AllZeroCombination);
    }
    let d = Matrix::from_fn(n, |i, j| terms.iter().map(|&(c, m)| c * m.get(i, j)).sum());
    let scale = d.as_slice().iter().copied().fold(1.0, f64::max);
    check_axioms(&d, CONSTRUCTED_TOL * scale)?;
    Ok(MetricMatrix::from_trusted(d))
}

/// All-pairs shortest-path metric of a connected weighted graph.
pub fn graph_metric(g: &WeightedGraph) -> Result<MetricMatrix, MetricError> {
    let d = g.shortest_paths()?;
    let scale = d.as_slice().iter().copied().fold(1.0, f64::max);
    check_axioms(&d, CONSTRUCTED_TOL * scale)?;
    Ok(MetricMatrix::from_trusted(d))
}

/// Edges that carry no information about the distance matrix: some other
/// vertex `k` already gives `d[i][k] + d[k][j] <= w(i, j)`.
pub fn redundant_edges(g: &WeightedGraph) -> Result<Vec<Edge>, MetricError> {
    let d = g.shortest_paths()?;
    let n = g.vertex_count();
    Ok(g.edges()
        .iter()
        .filter(|e| {
            (0..n)
                .filter(|&k| k != e.i && k != e.j)
                .any(|k| d[(e.i, k)] + d[(k, e.j)] <= e.w + CONSTRUCTED_TOL)
        })
        .copied()
        .collect())
}
