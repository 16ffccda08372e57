mod common;

use common::arb_graph;
use mpnn_walks::{parse_edge_list, parse_tu_collection, Graph, GraphCollection, GraphError, SyntheticSpec};
use proptest::prelude::*;

proptest! {
    #[test]
    fn edge_list_round_trip(g in arb_graph(12)) {
        prop_assert_eq!(parse_edge_list(&g.to_edge_list(), None).unwrap(), g.clone());
        let back: Graph = serde_json::from_str(&g.to_json()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn degrees_sum_to_twice_edges(g in arb_graph(12)) {
        prop_assert!(g.check_invariants().is_ok());
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn collection_json_round_trip(graphs in proptest::collection::vec(arb_graph(6), 0..5)) {
        let c = GraphCollection::new(graphs);
        let back: GraphCollection = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back.total_nodes(), c.total_nodes());
        for global in 0..c.total_nodes() {
            prop_assert_eq!(back.node_origin(global), c.node_origin(global));
        }
        prop_assert_eq!(back, c);
    }

    #[test]
    fn synthetic_spec_text_round_trip(n in 1usize..50, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let spec = SyntheticSpec::new(mpnn_walks::SyntheticKind::ErdosRenyi { n, p }, seed);
        let text = spec.kind.to_string();
        let parsed: mpnn_walks::SyntheticKind = text.parse().unwrap();
        prop_assert_eq!(parsed, spec.kind);
    }
}

#[test]
fn tu_collection_parses() {
    let adj = "1, 2\n2, 1\n2, 3\n3, 2\n4, 5\n5, 4\n";
    let ind = "1\n1\n1\n2\n2\n";
    let c = parse_tu_collection(adj, ind, Some("1\n-1\n")).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c.graphs()[0].edge_count(), 2);
    assert_eq!(c.graphs()[1].edge_count(), 1);
    assert_eq!(c.labels(), Some(&[1, -1][..]));
}

#[test]
fn self_loop_rejected_with_line() {
    match parse_edge_list("0 1\n2 2\n", None) {
        Err(GraphError::SelfLoop { node: 2, line: Some(2) }) => {}
        other => panic!("unexpected {other:?}"),
    }
}
