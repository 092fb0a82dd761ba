mod common;

use common::{brute_force_betweenness, floyd_warshall, random_graph};
use hierlab_core::graph::io::{load_dataset, write_csv_dataset};
use hierlab_core::graph::{
    betweenness, edge_homophily, local_clustering, shortest_path_lengths, Graph, UNREACHABLE,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..n * 3)
            .prop_map(move |edges| Graph::from_edges(n, edges).unwrap())
    })
}

fn assert_symmetric(g: &Graph) {
    for u in 0..g.node_count() {
        for &v in g.neighbors(u) {
            assert!(g.neighbors(v).contains(&u), "{u} -> {v} not mirrored");
            assert_ne!(u, v);
        }
        assert!(g.neighbors(u).windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn brandes_matches_path_enumeration_on_small_graphs() {
    for seed in 0..300u64 {
        let n = 2 + (seed as usize % 8);
        let p = [0.2, 0.4, 0.7][seed as usize % 3];
        let g = random_graph(n, p, seed);
        let fast = betweenness(&g);
        let slow = brute_force_betweenness(&g);
        for v in 0..n {
            assert!(
                (fast[v] - slow[v]).abs() < 1e-9,
                "seed {seed} node {v}: {} vs {}",
                fast[v],
                slow[v]
            );
        }
    }
}

#[test]
fn bfs_agrees_with_floyd_warshall() {
    for seed in 0..20u64 {
        let g = random_graph(15, 0.15, seed);
        let d = floyd_warshall(&g);
        for s in 0..15 {
            let bfs = shortest_path_lengths(&g, s, usize::MAX).unwrap();
            for t in 0..15 {
                if d[s][t].is_finite() {
                    assert_eq!(bfs[t] as f64, d[s][t]);
                } else {
                    assert_eq!(bfs[t], UNREACHABLE);
                }
            }
        }
    }
}

#[test]
fn clustering_matches_triangle_count() {
    for seed in 0..20u64 {
        let g = random_graph(12, 0.4, seed);
        let c = local_clustering(&g);
        for v in 0..12 {
            let nb = g.neighbors(v);
            let k = nb.len();
            let links = nb
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| nb[i + 1..].iter().map(move |&b| (a, b)))
                .filter(|&(a, b)| g.has_edge(a, b))
                .count();
            let expected = if k < 2 {
                0.0
            } else {
                2.0 * links as f64 / (k * (k - 1)) as f64
            };
            assert!((c[v] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn csv_round_trip_keeps_adjacency_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels: Vec<Option<usize>> = (0..30)
        .map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0..3)))
        .collect();
    let g = random_graph(30, 0.1, 3).with_labels(labels, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_csv_dataset(dir.path(), &g, None).unwrap();
    let back = load_dataset(dir.path()).unwrap().graph;
    assert_symmetric(&back);
    assert_eq!(back.edges(), g.edges());
    assert_eq!(back.labels(), g.labels());
}

proptest! {
    #[test]
    fn adjacency_is_symmetric_and_degrees_sum_to_twice_edges(g in arb_graph(25)) {
        assert_symmetric(&g);
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
        for &(u, v) in g.edges() {
            prop_assert!(u < v);
            prop_assert!(g.has_edge(v, u));
        }
    }

    #[test]
    fn homophily_ignores_class_names(seed in 0u64..10_000, classes in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(20, 0.25, seed);
        prop_assume!(g.edge_count() > 0);
        let labels: Vec<Option<usize>> = (0..20).map(|_| Some(rng.gen_range(0..classes))).collect();
        let mut perm: Vec<usize> = (0..classes).collect();
        perm.shuffle(&mut rng);
        let relabeled = labels.iter().map(|l| l.map(|c| perm[c])).collect();
        let a = edge_homophily(&g.clone().with_labels(labels, classes).unwrap()).unwrap();
        let b = edge_homophily(&g.with_labels(relabeled, classes).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn relabeling_nodes_permutes_betweenness(seed in 0u64..10_000) {
        let g = random_graph(10, 0.3, seed);
        let mut perm: Vec<usize> = (0..10).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let h = g.permuted(&perm).unwrap();
        let (a, b) = (betweenness(&g), betweenness(&h));
        for v in 0..10 {
            prop_assert!((a[v] - b[perm[v]]).abs() < 1e-9);
        }
    }
}
