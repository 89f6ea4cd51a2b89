#![allow(dead_code)]

use ctxseg::context::LinkMatrix;
use ctxseg::io::FeatureMatrix;
use ctxseg::simgraph::{build_knn_graph, SimilarityGraph};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let data = (0..n * d).map(|_| rng.random_range(0.01f32..1.0)).collect();
    let mut f = FeatureMatrix::new(n, d, data).unwrap();
    f.normalize_rows().unwrap();
    f
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SimilarityGraph {
    build_knn_graph(&random_features(rng, n, 8), k).unwrap()
}

/// Dense `L = D^-1/2 W D^-1/2` rebuilt from the stored edge weights.
pub fn dense_operator(g: &SimilarityGraph) -> DMatrix<f64> {
    let n = g.node_count();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g.weight(i, j)).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let w = g.weight(i, j);
        if w == 0.0 {
            0.0
        } else {
            w / (deg[i] * deg[j]).sqrt()
        }
    })
}

/// `(I - mu L)^-1` by LU decomposition.
pub fn dense_resolvent(g: &SimilarityGraph, mu: f64) -> DMatrix<f64> {
    let n = g.node_count();
    let m = DMatrix::identity(n, n) - dense_operator(g) * mu;
    m.lu().try_inverse().expect("I - mu L is invertible for mu < 1")
}

pub fn dense_links(p: &LinkMatrix) -> DMatrix<f64> {
    let n = p.size();
    let mut m = DMatrix::zeros(n, n);
    for &(i, j) in p.entries() {
        m[(i, j)] = 1.0;
    }
    m
}

pub fn random_links(rng: &mut ChaCha8Rng, n: usize, rows: &[usize], density: f64) -> LinkMatrix {
    let mut entries = Vec::new();
    for &i in rows {
        for j in 0..n {
            if rng.random_bool(density) {
                entries.push((i, j));
            }
        }
    }
    if entries.is_empty() {
        entries.push((rows[0], rows[0]));
    }
    LinkMatrix::new((0, 1), n, entries).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Capacity of the cut separating `side[i] == true` from the rest.
pub fn cut_capacity(arcs: &[(usize, usize, f64)], side: &[bool]) -> f64 {
    arcs.iter().filter(|&&(u, v, _)| side[u] && !side[v]).map(|a| a.2).sum()
}

/// Minimum s-t cut by enumerating every assignment of the inner nodes.
pub fn brute_force_min_cut(n: usize, s: usize, t: usize, arcs: &[(usize, usize, f64)]) -> f64 {
    let inner: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << inner.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (b, &v) in inner.iter().enumerate() {
            side[v] = mask >> b & 1 == 1;
        }
        best = best.min(cut_capacity(arcs, &side));
    }
    best
}

pub fn random_network(rng: &mut ChaCha8Rng, max_nodes: usize, max_cap: u32) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.random_range(2..=max_nodes);
    let m = rng.random_range(0..=3 * n);
    let arcs = (0..m)
        .filter_map(|_| {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let c = rng.random_range(0..=max_cap) as f64;
            (u != v).then_some((u, v, c))
        })
        .collect();
    (n, arcs)
}

/// Every labeling of `n` nodes over `c` labels, in lexicographic order.
pub fn for_each_labeling(n: usize, c: usize, mut f: impl FnMut(&[usize])) {
    let mut x = vec![0usize; n];
    loop {
        f(&x);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            x[k] += 1;
            if x[k] < c {
                break;
            }
            x[k] = 0;
            k += 1;
        }
    }
}
