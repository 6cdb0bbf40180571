use std::collections::BTreeSet;

use super::GraphError;
use crate::linalg::Matrix;

/// Undirected edge `i — j` with a positive distance weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Simple undirected graph with distance weights on its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Validates vertex indices, weights and edge uniqueness. Connectivity is
    /// checked lazily by the distance computations.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GraphError::VertexOutOfRange { i, j, n });
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(GraphError::BadWeight { i, j, w });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(GraphError::DuplicateEdge { i, j });
            }
            out.push(Edge { i, j, w });
        }
        Ok(Self { n, edges: out })
    }

    /// Unit-weight complete bipartite graph on blocs `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Result<Self, GraphError> {
        let edges = (0..a).flat_map(|i| (a..a + b).map(move |j| (i, j, 1.0)));
        Self::new(a + b, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The graph with the given edges removed (matched on unordered endpoints).
    pub fn without(&self, removed: &[Edge]) -> Self {
        let key = |e: &Edge| (e.i.min(e.j), e.i.max(e.j));
        let drop: BTreeSet<_> = removed.iter().map(key).collect();
        Self {
            n: self.n,
            edges: self.edges.iter().filter(|e| !drop.contains(&key(e))).copied().collect(),
        }
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(v);
        }
        groups
    }

    /// Floyd–Warshall distances; fails on disconnected graphs.
    pub(crate) fn shortest_paths(&self) -> Result<Matrix, GraphError> {
        let components = self.components();
        if components.len() > 1 {
            return Err(GraphError::DisconnectedGraph { components });
        }
        let n = self.n;
        let mut d = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { f64::INFINITY });
        for e in &self.edges {
            d[(e.i, e.j)] = e.w;
            d[(e.j, e.i)] = e.w;
        }
        for k in 0..n {
            for i in 0..n {
                let dik = d[(i, k)];
                for j in 0..n {
                    let via = dik + d[(k, j)];
                    if via < d[(i, j)] {
                        d[(i, j)] = via;
                    }
                }
            }
        }
        Ok(d)
    }
}
