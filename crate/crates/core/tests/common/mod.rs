#![allow(dead_code)]

use mpnn_walks::Graph;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Graphs on `1..=max_n` nodes with each possible edge present or not.
pub fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut i = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[i] {
                        edges.push((u, v));
                    }
                    i += 1;
                }
            }
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

pub fn arb_graph_with_perm(max_n: usize) -> impl Strategy<Value = (Graph, Vec<usize>)> {
    arb_graph(max_n).prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

/// `A + I` as a dense nalgebra matrix.
pub fn augmented_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    DMatrix::from_fn(n, n, |i, j| if i == j || g.has_edge(i, j) { 1.0 } else { 0.0 })
}

/// `(D+I)^{-1/2} (A+I) (D+I)^{-1/2}`.
pub fn normalized_operator(g: &Graph) -> DMatrix<f64> {
    let a = augmented_adjacency(g);
    let n = g.node_count();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (((g.degree(i) + 1) * (g.degree(j) + 1)) as f64).sqrt())
}
