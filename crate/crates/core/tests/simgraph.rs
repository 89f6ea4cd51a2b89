mod common;

use std::collections::BTreeSet;

use ctxseg::io::FeatureMatrix;
use ctxseg::simgraph::build_knn_graph;
use proptest::prelude::*;

fn positive_features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    use rand::RngExt;
    let mut rng = common::rng(seed);
    let data = (0..n * d).map(|_| rng.random_range(0.01f32..1.0)).collect();
    let mut f = FeatureMatrix::new(n, d, data).unwrap();
    f.normalize_rows().unwrap();
    f
}

/// Exhaustive top-k by inner product, ties to the lower index, union-symmetrized.
fn brute_force_edges(f: &FeatureMatrix, k: usize) -> BTreeSet<(usize, usize)> {
    let n = f.rows();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| f.dot(i, b).total_cmp(&f.dot(i, a)).then(a.cmp(&b)));
        for &j in &others[..k] {
            if f.dot(i, j) as f32 > 0.0 {
                edges.insert((i, j));
                edges.insert((j, i));
            }
        }
    }
    edges
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn knn_matches_brute_force(n in 3usize..200, k in 1usize..8, d in 2usize..6, seed in any::<u64>()) {
        let k = k.min(n - 1);
        let f = positive_features(n, d, seed);
        let g = build_knn_graph(&f, k).unwrap();
        let got: BTreeSet<(usize, usize)> = g.edges().map(|(i, j, _)| (i, j)).collect();
        let want: BTreeSet<(usize, usize)> = brute_force_edges(&f, k).into_iter().filter(|&(i, j)| i < j).collect();
        prop_assert_eq!(&got, &want);
        for (i, j, w) in g.edges() {
            prop_assert_eq!(w, f.dot(i, j).max(0.0) as f32 as f64);
        }
    }

    #[test]
    fn operator_is_symmetric(n in 3usize..80, k in 1usize..6, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let g = common::random_graph(&mut rng, n, k.min(n - 1));
        use rand::RngExt;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let (lx, ly) = (g.apply(&x).unwrap(), g.apply(&y).unwrap());
        prop_assert!((dot(&x, &ly) - dot(&y, &lx)).abs() <= 1e-9);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g.operator_entry(i, j), g.operator_entry(j, i));
            }
        }
    }

    #[test]
    fn spectral_radius_is_at_most_one(n in 3usize..80, k in 1usize..6, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let g = common::random_graph(&mut rng, n, k.min(n - 1));
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..300 {
            let w = g.apply(&v).unwrap();
            lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            v = w.iter().map(|x| x / norm).collect();
        }
        prop_assert!((0.0..=1.0 + 1e-9).contains(&lambda), "largest eigenvalue estimate {}", lambda);
    }
}

#[test]
fn two_node_example() {
    let f = FeatureMatrix::new(2, 2, vec![1.0, 0.0, 0.8, 0.6]).unwrap();
    let g = build_knn_graph(&f, 1).unwrap();
    assert_eq!(g.nnz(), 2);
    assert_eq!(g.weight(0, 1), 0.8f32 as f64);
    assert_eq!(g.operator_entry(0, 1), 1.0);
    assert_eq!(g.apply(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn degree_matches_row_sums() {
    let g = common::random_graph(&mut common::rng(5), 60, 6);
    for (i, &d) in g.degrees().iter().enumerate() {
        let sum: f64 = g.neighbors(i).map(|(_, w)| w).sum();
        assert!((sum - d).abs() <= 1e-12, "node {i}: degree {d}, row sum {sum}");
    }
}
