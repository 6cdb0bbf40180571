#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;

use tradegeom_core::metric::{graph_metric, validate_metric, MetricMatrix, WeightedGraph};

/// Edges of a connected graph on `n` vertices: the path `0-1-…-(n-1)` plus a
/// random subset of the remaining pairs.
pub fn connected_edges(n: usize, weights: impl Strategy<Value = f64> + Clone) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    let pairs = n * (n - 1) / 2;
    (vec(weights, pairs), vec(any::<bool>(), pairs)).prop_map(move |(w, keep)| {
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || keep[k] {
                    edges.push((i, j, w[k]));
                }
                k += 1;
            }
        }
        edges
    })
}

pub fn connected_graph(nmin: usize, nmax: usize, lo: f64, hi: f64) -> impl Strategy<Value = WeightedGraph> {
    (nmin..=nmax).prop_flat_map(move |n| {
        connected_edges(n, lo..hi).prop_map(move |edges| WeightedGraph::new(n, edges).unwrap())
    })
}

/// Shortest-path metric of a random connected graph.
pub fn graph_metric_strategy(nmin: usize, nmax: usize) -> impl Strategy<Value = MetricMatrix> {
    connected_graph(nmin, nmax, 0.2, 2.0).prop_map(|g| graph_metric(&g).unwrap())
}

/// `ℓ¹` distances between random points of `R³`; always of negative type.
pub fn l1_metric(nmin: usize, nmax: usize) -> impl Strategy<Value = MetricMatrix> {
    (nmin..=nmax).prop_flat_map(|n| {
        vec([-1.0f64..1.0, -1.0..1.0, -1.0..1.0], n).prop_map(|pts| {
            let rows: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| pts.iter().map(|q| (0..3).map(|k| (p[k] - q[k]).abs()).sum()).collect())
                .collect();
            validate_metric(&rows, 1e-12).unwrap()
        })
    })
}

/// Metrics of both kinds, so stable and unstable cases both occur.
pub fn mixed_metric(nmin: usize, nmax: usize) -> BoxedStrategy<MetricMatrix> {
    prop_oneof![graph_metric_strategy(nmin, nmax), l1_metric(nmin, nmax)].boxed()
}

pub fn max_entry_diff(a: &MetricMatrix, b: &MetricMatrix) -> f64 {
    let n = a.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a.get(i, j) - b.get(i, j)).abs());
        }
    }
    worst
}
