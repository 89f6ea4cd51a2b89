//! k-nearest-neighbor similarity graph over superpixel features and its
//! symmetric normalized propagation operator `L = D^-1/2 W D^-1/2`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FeatureMatrix;

/// Sparse symmetric affinity graph in CSR form.
///
/// Edge weights are stored at f32 precision (widened to f64) so that a graph
/// written to disk and read back is identical to the one built in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    operator: Vec<f64>,
}

impl SimilarityGraph {
    /// Build from directed entries `(i, j, w)`. Both orientations of every
    /// edge must be present with equal weight; zero weights are dropped.
    pub fn from_entries(n: usize, entries: &[(u32, u32, f32)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("graph must have at least one node"));
        }
        let mut sorted: Vec<(u32, u32, f32)> = Vec::with_capacity(entries.len());
        for &(i, j, w) in entries {
            if i as usize >= n || j as usize >= n {
                return Err(Error::validation(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::validation(format!("self-loop at node {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::validation(format!(
                    "edge ({i}, {j}) has invalid weight {w}"
                )));
            }
            if w > 0.0 {
                sorted.push((i, j, w));
            }
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = sorted.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::validation(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }

        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &sorted {
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<u32> = sorted.iter().map(|e| e.1).collect();
        let weights: Vec<f64> = sorted.iter().map(|e| e.2 as f64).collect();

        let mut g = Self {
            n,
            row_ptr,
            cols,
            weights,
            degrees: Vec::new(),
            operator: Vec::new(),
        };
        for i in 0..n {
            for (j, w) in g.neighbors(i) {
                if g.weight(j, i) != w {
                    return Err(Error::validation(format!(
                        "edge ({i}, {j}) has no matching reverse edge"
                    )));
                }
            }
        }
        g.finish()?;
        Ok(g)
    }

    fn finish(&mut self) -> Result<()> {
        self.degrees = (0..self.n)
            .map(|i| self.weights[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect();
        if let Some(i) = self.degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::validation(format!(
                "node {i} has no positive-weight neighbor"
            )));
        }
        self.operator = Vec::with_capacity(self.weights.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k] as usize;
                self.operator.push(self.weights[k] / (self.degrees[i] * self.degrees[j]).sqrt());
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of stored directed entries (twice the undirected edge count).
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// `W[i, j]`, zero when there is no edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.weights[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `L[i, j]`, zero when there is no edge.
    pub fn operator_entry(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.operator[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// All stored directed entries, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, f32)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i).map(move |(j, w)| (i as u32, j as u32, w as f32))
        })
    }

    /// `out = L v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[r.clone()]
                .iter()
                .zip(&self.operator[r])
                .map(|(&j, &l)| l * v[j as usize])
                .sum();
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::validation(format!(
                "vector length {} does not match graph size {}",
                v.len(),
                self.n
            )));
        }
        let mut out = vec![0.0; self.n];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

/// Link every node to its `k` highest inner-product neighbors (ties to the
/// lower index), symmetrize by union, and weight edges by the inner product
/// clamped at zero.
pub fn build_knn_graph(f: &FeatureMatrix, k: usize) -> Result<SimilarityGraph> {
    let n = f.rows();
    if k == 0 || k >= n {
        return Err(Error::validation(format!(
            "k must satisfy 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let neighbors: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(u32, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j as u32, f.dot(i, j)))
                .collect();
            let order = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
            cand.select_nth_unstable_by(k - 1, order);
            cand.truncate(k);
            cand.sort_by(order);
            cand
        })
        .collect();

    let mut entries = Vec::with_capacity(2 * n * k);
    for (i, list) in neighbors.iter().enumerate() {
        for &(j, dot) in list {
            let w = dot.max(0.0) as f32;
            entries.push((i as u32, j, w));
            entries.push((j, i as u32, w));
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    entries.dedup_by_key(|e| (e.0, e.1));
    SimilarityGraph::from_entries(n, &entries)
}
