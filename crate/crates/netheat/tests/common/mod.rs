//! Shared fixtures: seeded random graphs and an all-pairs distance oracle
//! that knows nothing about the library's shortest-path code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netheat::graph::{GraphBuilder, MetricGraph, VertexId};

/// Connected random graph with `n_edges` edges (2..=12): a random spanning
/// tree over about two thirds as many vertices plus extra chords, lengths
/// in [0.5, 1.5]. Chords may duplicate tree edges, so parallel edges occur
/// and exercise the multigraph paths. The same seed always yields the same
/// graph.
pub fn random_graph(seed: u64, n_edges: usize) -> MetricGraph {
    assert!((2..=12).contains(&n_edges));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vertices = (2 * n_edges / 3).clamp(2, n_edges);
    let name = |i: usize| format!("v{i}");

    let mut b = GraphBuilder::new();
    let mut edge_count = 0;
    for i in 1..n_vertices {
        let j = rng.random_range(0..i);
        b.edge(
            &format!("e{edge_count}"),
            &name(j),
            &name(i),
            rng.random_range(0.5..1.5),
        );
        edge_count += 1;
    }
    while edge_count < n_edges {
        let i = rng.random_range(0..n_vertices);
        let j = rng.random_range(0..n_vertices);
        if i == j {
            continue;
        }
        b.edge(
            &format!("e{edge_count}"),
            &name(i.min(j)),
            &name(i.max(j)),
            rng.random_range(0.5..1.5),
        );
        edge_count += 1;
    }
    b.build()
}

/// All-pairs vertex distances by Floyd-Warshall over the edge lengths.
pub fn distance_oracle(graph: &MetricGraph) -> Vec<Vec<f64>> {
    let n = graph.num_vertices();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in graph.edge_ids() {
        let edge = graph.edge(e);
        let (i, j) = (edge.tail.0, edge.head.0);
        if edge.length < d[i][j] {
            d[i][j] = edge.length;
            d[j][i] = edge.length;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// First vertex id, the conventional root for random-graph tests.
pub fn first_vertex(graph: &MetricGraph) -> VertexId {
    graph.vertices().next().expect("graphs are nonempty")
}
