mod common;

use proptest::prelude::*;

use common::{connected_edges, connected_graph, graph_metric_strategy};
use tradegeom_core::metric::{
    bipartite_metric, combine, cut_metric, discrete_metric, graph_metric, redundant_edges, validate_metric,
    WeightedGraph,
};

#[test]
fn generated_families_validate() {
    let tol = 1e-12;
    for n in 1..=7 {
        for m in 1..=7 {
            let b = bipartite_metric(n, m).unwrap();
            assert!(validate_metric(&b.to_rows(), tol).is_ok());
        }
        let d = discrete_metric(n).unwrap();
        assert!(validate_metric(&d.to_rows(), tol).is_ok());
    }
    for n in 2..=7usize {
        for mask in 1..(1u32 << n) - 1 {
            let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let c = cut_metric(n, &set).unwrap();
            assert!(validate_metric(&c.to_rows(), tol).is_ok());
            let expect_degenerate = set.len() >= 2 || n - set.len() >= 2;
            assert_eq!(c.is_degenerate(), expect_degenerate);
        }
    }
}

#[test]
fn bipartite_equals_complete_bipartite_graph() {
    for n in 2..=6 {
        for m in 2..=6 {
            let g = WeightedGraph::complete_bipartite(n, m).unwrap();
            assert_eq!(graph_metric(&g).unwrap(), bipartite_metric(n, m).unwrap(), "K_{n},{m}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn graph_metrics_validate(m in graph_metric_strategy(1, 8)) {
        prop_assert!(validate_metric(&m.to_rows(), 1e-12).is_ok());
    }

    #[test]
    fn combine_is_linear(
        (m1, m2) in (2usize..=8).prop_flat_map(|n| {
            let one = move || {
                connected_edges(n, 0.2f64..2.0).prop_map(move |e| graph_metric(&WeightedGraph::new(n, e).unwrap()).unwrap())
            };
            (one(), one())
        }),
        a in 0.0f64..5.0,
        b in 0.01f64..5.0,
    ) {
        let c = combine(&[(a, &m1), (b, &m2)]).unwrap();
        for i in 0..m1.len() {
            for j in 0..m1.len() {
                let expected = a * m1.get(i, j) + b * m2.get(i, j);
                prop_assert!((c.get(i, j) - expected).abs() <= 1e-15 * expected.max(1.0));
            }
        }
    }

    #[test]
    fn removing_redundant_edges_keeps_distances(g in connected_graph(2, 8, 1.0, 6.0).prop_map(|g| {
        // integer weights keep every path length exact
        let edges = g.edges().iter().map(|e| (e.i, e.j, e.w.floor()));
        WeightedGraph::new(g.vertex_count(), edges).unwrap()
    })) {
        let before = graph_metric(&g).unwrap();
        let redundant = redundant_edges(&g).unwrap();
        let pruned = g.without(&redundant);
        prop_assert_eq!(graph_metric(&pruned).unwrap(), before);
    }
}
