#![allow(dead_code)]

use assocnet::SemanticNetwork;
use proptest::prelude::*;

pub fn label(i: usize) -> String {
    format!("w{i:03}")
}

/// Edge list of a random connected graph: a random spanning tree plus
/// `extra` candidate edges (duplicates and loops discarded).
pub fn connected_edges(
    max_nodes: usize,
    max_weight: u32,
) -> impl Strategy<Value = (usize, Vec<(usize, usize, u32)>)> {
    (2..=max_nodes).prop_flat_map(move |n| {
        let tree = proptest::collection::vec((any::<prop::sample::Index>(), 1..=max_weight), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n, 1..=max_weight), 0..=2 * n);
        (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
            let mut seen = std::collections::HashSet::new();
            let mut edges = Vec::new();
            for (child, (parent, w)) in (1..n).zip(tree) {
                let p = parent.index(child);
                seen.insert((p, child));
                edges.push((p, child, w));
            }
            for (a, b, w) in extra {
                let key = (a.min(b), a.max(b));
                if a != b && seen.insert(key) {
                    edges.push((key.0, key.1, w));
                }
            }
            (n, edges)
        })
    })
}

pub fn network(n: usize, edges: &[(usize, usize, u32)]) -> SemanticNetwork {
    SemanticNetwork::from_edges(
        (0..n).map(label),
        edges.iter().map(|&(a, b, w)| (label(a), label(b), w)),
    )
    .unwrap()
}

pub fn connected_network(max_nodes: usize, max_weight: u32) -> impl Strategy<Value = SemanticNetwork> {
    connected_edges(max_nodes, max_weight).prop_map(|(n, e)| network(n, &e))
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
