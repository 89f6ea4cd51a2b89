//! Link prediction by two-stage label propagation.
//!
//! A single propagation solves `h = mu L h + (1 - mu) y`, either by the
//! fixed-point iteration started from zero or by a dense Cholesky solve of
//! `(I - mu L) h = (1 - mu) y`.
//!
//! For a link matrix `P`, the row stage propagates every row of `P` that
//! belongs to a labeled superpixel (giving `H_r = (1 - mu) P A`, with
//! `A = (I - mu L)^-1`), and the column stage propagates every column of
//! `H_r` over the first index (giving `H_c = (1 - mu) A H_r`). Together:
//!
//! ```text
//! H_c = (1 - mu)^2 A P A
//! ```
//!
//! Rows of `P` outside the labeled set are left at zero; since zero vectors
//! propagate to zero this changes nothing when `P` is supported on labeled
//! rows, which is the case for every exemplar-derived link matrix.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::LinkMatrix;
use crate::error::{Error, Result};
use crate::simgraph::SimilarityGraph;

/// Largest graph for which [`Solver::Auto`] picks the dense direct solver.
pub const AUTO_DIRECT_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Iterative,
    Direct,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PropagationConfig {
    /// Weight of the diffused term; `1 - mu` retains the initial scores.
    pub mu: f64,
    /// Bound on the 2-norm distance to the fixed point at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: Solver,
    /// Scores below this are dropped from the sparse output. Zero keeps all nonzeros.
    pub prune_eps: f64,
    /// Divide each class pair's scores by their maximum.
    pub normalize: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            mu: 0.99,
            tol: 1e-6,
            max_iter: 5000,
            solver: Solver::Auto,
            prune_eps: 1e-8,
            normalize: true,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        // mu = 0 is accepted as the degenerate retention-only case.
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::validation(format!("mu must lie in [0, 1), got {}", self.mu)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::validation(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::validation("max_iter must be >= 1"));
        }
        if !(self.prune_eps >= 0.0) {
            return Err(Error::validation("prune_eps must be >= 0"));
        }
        Ok(())
    }

    fn uses_direct(&self, n: usize) -> bool {
        match self.solver {
            Solver::Iterative => false,
            Solver::Direct => true,
            Solver::Auto => n <= AUTO_DIRECT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Euclidean norm of each iterate update (empty for the direct solver).
    pub updates: Vec<f64>,
}

/// Propagate one score vector over the graph.
pub fn propagate_labels(
    g: &SimilarityGraph,
    y: &[f64],
    cfg: &PropagationConfig,
) -> Result<Propagation> {
    cfg.validate()?;
    check_vector(g, y)?;
    let prop = Propagator::new(g, cfg)?;
    Ok(match &prop.chol {
        Some(_) => prop.solve(y),
        None => iterate(g, y, cfg, true),
    })
}

fn check_vector(g: &SimilarityGraph, y: &[f64]) -> Result<()> {
    if y.len() != g.node_count() {
        return Err(Error::validation(format!(
            "vector length {} does not match graph size {}",
            y.len(),
            g.node_count()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("initial scores must be finite"));
    }
    Ok(())
}

/// `h <- mu L h + (1 - mu) y` from `h = 0`. With `rho(L) <= 1` the iteration
/// contracts by `mu` in the 2-norm, so the distance to the fixed point after
/// an update `delta` is at most `mu / (1 - mu) * |delta|`; iteration stops
/// once that bound is within `tol`.
fn iterate(g: &SimilarityGraph, y: &[f64], cfg: &PropagationConfig, trace: bool) -> Propagation {
    let n = y.len();
    let mu = cfg.mu;
    let base: Vec<f64> = y.iter().map(|v| (1.0 - mu) * v).collect();
    let mut h = vec![0.0; n];
    let mut lh = vec![0.0; n];
    let mut updates = Vec::new();
    let bound = mu / (1.0 - mu);
    for it in 1..=cfg.max_iter {
        g.apply_into(&h, &mut lh);
        let mut delta2 = 0.0;
        for i in 0..n {
            let next = mu * lh[i] + base[i];
            let d = next - h[i];
            delta2 += d * d;
            h[i] = next;
        }
        let delta = delta2.sqrt();
        if trace {
            updates.push(delta);
        }
        if bound * delta <= cfg.tol {
            return Propagation { values: h, iterations: it, converged: true, updates };
        }
    }
    Propagation { values: h, iterations: cfg.max_iter, converged: false, updates }
}

/// A propagation operator prepared once per graph: either the dense
/// Cholesky factor of `I - mu L` or the settings for iteration.
pub struct Propagator<'a> {
    graph: &'a SimilarityGraph,
    cfg: PropagationConfig,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl<'a> Propagator<'a> {
    pub fn new(graph: &'a SimilarityGraph, cfg: &PropagationConfig) -> Result<Self> {
        cfg.validate()?;
        let n = graph.node_count();
        let chol = if cfg.uses_direct(n) {
            let mut a = DMatrix::<f64>::identity(n, n);
            for i in 0..n {
                for (j, _) in graph.neighbors(i) {
                    a[(i, j)] -= cfg.mu * graph.operator_entry(i, j);
                }
            }
            Some(a.cholesky().ok_or_else(|| {
                Error::validation("I - mu L is not positive definite; check the graph")
            })?)
        } else {
            None
        };
        Ok(Self { graph, cfg: *cfg, chol })
    }

    pub fn is_direct(&self) -> bool {
        self.chol.is_some()
    }

    pub fn solve(&self, y: &[f64]) -> Propagation {
        match &self.chol {
            Some(chol) => {
                let b = DMatrix::from_column_slice(y.len(), 1, y);
                let x = chol.solve(&b);
                Propagation {
                    values: x.iter().map(|&v| clamp_rounding((1.0 - self.cfg.mu) * v)).collect(),
                    iterations: 1,
                    converged: true,
                    updates: Vec::new(),
                }
            }
            None => iterate(self.graph, y, &self.cfg, false),
        }
    }

    /// Propagate each column of `b` (n x m). Returns the solutions as columns
    /// together with a stage report.
    fn solve_columns(&self, b: DMatrix<f64>) -> (DMatrix<f64>, StageReport) {
        let m = b.ncols();
        match &self.chol {
            Some(chol) => {
                let mut x = chol.solve(&b);
                let scale = 1.0 - self.cfg.mu;
                x.iter_mut().for_each(|v| *v = clamp_rounding(scale * *v));
                (x, StageReport { solves: m, max_iterations: 1, converged: true })
            }
            None => {
                let cols: Vec<Option<Propagation>> = (0..m)
                    .into_par_iter()
                    .map(|c| {
                        let col = b.column(c);
                        if col.iter().all(|&v| v == 0.0) {
                            None
                        } else {
                            Some(iterate(self.graph, col.as_slice(), &self.cfg, false))
                        }
                    })
                    .collect();
                let mut x = DMatrix::zeros(b.nrows(), m);
                let mut report = StageReport { solves: 0, max_iterations: 0, converged: true };
                for (c, p) in cols.into_iter().enumerate() {
                    if let Some(p) = p {
                        report.solves += 1;
                        report.max_iterations = report.max_iterations.max(p.iterations);
                        report.converged &= p.converged;
                        x.column_mut(c).copy_from_slice(&p.values);
                    }
                }
                (x, report)
            }
        }
    }
}

/// `(I - mu L)^-1` is entrywise non-negative; a dense solve can still leave
/// rounding-level negatives, which are zeroed.
fn clamp_rounding(v: f64) -> f64 {
    v.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageReport {
    pub solves: usize,
    pub max_iterations: usize,
    pub converged: bool,
}

/// Sparse score matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], cols: Vec::new(), vals: Vec::new() }
    }

    /// From `(i, j, value)` triples; zeros are dropped, duplicates rejected.
    pub fn from_triples(n: usize, mut triples: Vec<(usize, usize, f64)>) -> Result<Self> {
        triples.retain(|t| t.2 != 0.0);
        triples.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        for (k, &(i, j, v)) in triples.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::validation(format!("score ({i}, {j}) out of range for {n}")));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(format!("score ({i}, {j}) = {v} is not a finite non-negative value")));
            }
            if k > 0 && (triples[k - 1].0, triples[k - 1].1) == (i, j) {
                return Err(Error::validation(format!("duplicate score entry ({i}, {j})")));
            }
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            cols: triples.iter().map(|t| t.1 as u32).collect(),
            vals: triples.iter().map(|t| t.2).collect(),
        })
    }

    fn from_dense(x: &DMatrix<f64>, prune_eps: f64) -> Self {
        let n = x.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for j in 0..x.ncols() {
                let v = x[(i, j)];
                if v > 0.0 && v >= prune_eps {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.cols[k] as usize, self.vals[k]))
        })
    }

    pub fn max(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: f64) {
        self.vals.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.iter() {
            out[i][j] = v;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPrediction {
    pub scores: ScoreMatrix,
    pub row_stage: StageReport,
    pub column_stage: StageReport,
}

impl LinkPrediction {
    pub fn converged(&self) -> bool {
        self.row_stage.converged && self.column_stage.converged
    }
}

/// Two-stage link propagation of one link matrix. Only rows listed in
/// `labeled` take part in the row stage.
pub fn predict_links(
    g: &SimilarityGraph,
    p: &LinkMatrix,
    labeled: &[usize],
    cfg: &PropagationConfig,
) -> Result<LinkPrediction> {
    let prop = Propagator::new(g, cfg)?;
    predict_with(&prop, p, labeled)
}

fn predict_with(prop: &Propagator<'_>, p: &LinkMatrix, labeled: &[usize]) -> Result<LinkPrediction> {
    let n = prop.graph.node_count();
    if p.size() != n {
        return Err(Error::validation(format!(
            "link matrix size {} does not match graph size {n}",
            p.size()
        )));
    }
    let mut allowed = vec![false; n];
    for &i in labeled {
        *allowed.get_mut(i).ok_or_else(|| {
            Error::validation(format!("labeled superpixel {i} out of range for {n}"))
        })? = true;
    }
    let rows: Vec<usize> = p.nonzero_rows().into_iter().filter(|&r| allowed[r]).collect();
    if rows.is_empty() {
        let idle = StageReport { solves: 0, max_iterations: 0, converged: true };
        return Ok(LinkPrediction { scores: ScoreMatrix::zeros(n), row_stage: idle, column_stage: idle });
    }

    // Row stage: each selected row of P, as a vector over columns.
    let mut b1 = DMatrix::zeros(n, rows.len());
    for (k, &r) in rows.iter().enumerate() {
        for c in p.row(r) {
            b1[(c, k)] = 1.0;
        }
    }
    let (h_rows, row_stage) = prop.solve_columns(b1);

    // Column stage: column c of H_r has entries H_r[r][c] at the selected rows.
    let mut b2 = DMatrix::zeros(n, n);
    for (k, &r) in rows.iter().enumerate() {
        for c in 0..n {
            b2[(r, c)] = h_rows[(c, k)];
        }
    }
    let (h_c, column_stage) = prop.solve_columns(b2);

    Ok(LinkPrediction {
        scores: ScoreMatrix::from_dense(&h_c, prop.cfg.prune_eps),
        row_stage,
        column_stage,
    })
}

/// Learned scores per class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextScores {
    n: usize,
    num_labels: usize,
    pairs: BTreeMap<(usize, usize), ScoreMatrix>,
}

impl ContextScores {
    pub fn new(n: usize, num_labels: usize) -> Self {
        Self { n, num_labels, pairs: BTreeMap::new() }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn insert(&mut self, pair: (usize, usize), m: ScoreMatrix) -> Result<()> {
        if pair.0 >= self.num_labels || pair.1 >= self.num_labels || m.size() != self.n {
            return Err(Error::validation(format!(
                "score block {pair:?} of size {} does not fit {} labels over {} superpixels",
                m.size(),
                self.num_labels,
                self.n
            )));
        }
        self.pairs.insert(pair, m);
        Ok(())
    }

    pub fn pair(&self, m: usize, n: usize) -> Option<&ScoreMatrix> {
        self.pairs.get(&(m, n))
    }

    /// `S(v_i, l_m, v_j, l_n)`; zero when unknown.
    pub fn get(&self, m: usize, n: usize, i: usize, j: usize) -> f64 {
        self.pairs.get(&(m, n)).map_or(0.0, |s| s.get(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &ScoreMatrix)> {
        self.pairs.iter().map(|(&k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Multiply every score by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.pairs.values_mut().for_each(|s| s.scale(factor));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairReport {
    pub pair: [usize; 2],
    pub links: usize,
    pub row_stage: StageReport,
    pub column_stage: StageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropagationReport {
    pub direct: bool,
    pub pairs: Vec<PairReport>,
}

impl PropagationReport {
    pub fn converged(&self) -> bool {
        self.pairs.iter().all(|p| p.row_stage.converged && p.column_stage.converged)
    }
}

/// Run link prediction for every class pair, then (optionally) max-normalize
/// each pair's scores to `[0, 1]`.
pub fn compute_context_scores(
    g: &SimilarityGraph,
    links: &[LinkMatrix],
    labeled: &[usize],
    num_labels: usize,
    cfg: &PropagationConfig,
) -> Result<(ContextScores, PropagationReport)> {
    let prop = Propagator::new(g, cfg)?;
    let results: Vec<Result<((usize, usize), LinkPrediction, usize)>> = links
        .par_iter()
        .map(|p| Ok((p.pair(), predict_with(&prop, p, labeled)?, p.nnz())))
        .collect();
    let mut scores = ContextScores::new(g.node_count(), num_labels);
    let mut report = PropagationReport { direct: prop.is_direct(), pairs: Vec::new() };
    for r in results {
        let (pair, mut pred, nnz) = r?;
        if cfg.normalize {
            let max = pred.scores.max();
            if max > 0.0 {
                pred.scores.scale(1.0 / max);
            }
        }
        report.pairs.push(PairReport {
            pair: [pair.0, pair.1],
            links: nnz,
            row_stage: pred.row_stage,
            column_stage: pred.column_stage,
        });
        scores.insert(pair, pred.scores)?;
    }
    Ok((scores, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::FeatureMatrix;
    use crate::simgraph::build_knn_graph;

    fn complete3() -> SimilarityGraph {
        let f = FeatureMatrix::new(3, 2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        build_knn_graph(&f, 2).unwrap()
    }

    fn cfg(mu: f64, solver: Solver) -> PropagationConfig {
        PropagationConfig { mu, tol: 1e-12, max_iter: 100_000, solver, prune_eps: 0.0, normalize: false }
    }

    #[test]
    fn mu_zero_returns_input() {
        let g = complete3();
        let y = [0.3, 0.0, 1.7];
        for solver in [Solver::Iterative, Solver::Direct] {
            let p = propagate_labels(&g, &y, &cfg(0.0, solver)).unwrap();
            assert_eq!(p.values, y.to_vec());
            assert!(p.converged);
        }
        let p = propagate_labels(&g, &y, &cfg(0.0, Solver::Iterative)).unwrap();
        assert_eq!(p.iterations, 1);
    }

    #[test]
    fn complete3_fixed_point() {
        // L = 0.5 (J - I). (I - 0.5 L) = [[1, -.25, -.25], ...]; its inverse
        // applied to e1 solves by symmetry: h = (a, b, b) with a - b/2 = 1 and
        // b - (a + b)/4 = 0, so a = 1.2, b = 0.4; times (1 - mu) = 0.5.
        let g = complete3();
        let y = [1.0, 0.0, 0.0];
        let expect = [0.6, 0.2, 0.2];
        for solver in [Solver::Iterative, Solver::Direct] {
            let p = propagate_labels(&g, &y, &cfg(0.5, solver)).unwrap();
            for (a, b) in p.values.iter().zip(expect) {
                assert!((a - b).abs() <= 1e-9, "{solver:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_vector_is_fixed() {
        let g = complete3();
        let p = propagate_labels(&g, &[2.5; 3], &cfg(0.9, Solver::Iterative)).unwrap();
        for v in p.values {
            assert!((v - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = complete3();
        let c = PropagationConfig { max_iter: 3, ..cfg(0.99, Solver::Iterative) };
        let p = propagate_labels(&g, &[1.0, 0.0, 0.0], &c).unwrap();
        assert!(!p.converged);
        assert_eq!(p.iterations, 3);
    }

    #[test]
    fn rejects_bad_config_and_length() {
        let g = complete3();
        assert!(propagate_labels(&g, &[1.0; 2], &cfg(0.5, Solver::Direct)).is_err());
        assert!(propagate_labels(&g, &[1.0; 3], &cfg(1.0, Solver::Direct)).is_err());
        assert!(propagate_labels(&g, &[f64::NAN; 3], &cfg(0.5, Solver::Direct)).is_err());
    }

    #[test]
    fn zero_links_give_zero_scores() {
        let g = complete3();
        let p = LinkMatrix::new((0, 0), 3, vec![]).unwrap();
        let out = predict_links(&g, &p, &[0, 1, 2], &cfg(0.5, Solver::Direct)).unwrap();
        assert_eq!(out.scores.nnz(), 0);
    }

    #[test]
    fn two_node_single_link() {
        // L = [[0, 1], [1, 0]]; (I - 0.5 L)^-1 = (1/0.75) [[1, .5], [.5, 1]].
        // H_c = 0.25 A E_01 A = 0.25 * a0 a1^T where a0, a1 are A's columns.
        let f = FeatureMatrix::new(2, 2, vec![1.0, 0.0, 0.8, 0.6]).unwrap();
        let g = build_knn_graph(&f, 1).unwrap();
        let p = LinkMatrix::new((0, 1), 2, vec![(0, 1)]).unwrap();
        let a = [[4.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 4.0 / 3.0]];
        for solver in [Solver::Iterative, Solver::Direct] {
            let out = predict_links(&g, &p, &[0, 1], &cfg(0.5, solver)).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = 0.25 * a[i][0] * a[1][j];
                    assert!((out.scores.get(i, j) - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn unlabeled_rows_are_skipped() {
        let g = complete3();
        let p = LinkMatrix::new((0, 0), 3, vec![(1, 2)]).unwrap();
        let out = predict_links(&g, &p, &[0], &cfg(0.5, Solver::Direct)).unwrap();
        assert_eq!(out.scores.nnz(), 0);
        assert!(predict_links(&g, &p, &[7], &cfg(0.5, Solver::Direct)).is_err());
    }

    #[test]
    fn normalization_and_pair_count() {
        let g = complete3();
        let p = LinkMatrix::new((1, 1), 3, vec![(0, 1), (1, 0)]).unwrap();
        let c = PropagationConfig { normalize: true, ..cfg(0.5, Solver::Direct) };
        let (s, report) = compute_context_scores(&g, &[p.clone()], &[0, 1], 2, &c).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.pair(1, 1).unwrap().max() - 1.0).abs() < 1e-15);
        assert!(report.converged());
        // Duplicate links collapse in a 0/1 matrix, so scores are unchanged.
        let dup = LinkMatrix::new((1, 1), 3, vec![(0, 1), (1, 0), (0, 1)]).unwrap();
        let (s2, _) = compute_context_scores(&g, &[dup], &[0, 1], 2, &c).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn score_matrix_triples() {
        let m = ScoreMatrix::from_triples(3, vec![(2, 0, 0.5), (0, 1, 0.25), (1, 1, 0.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(2, 0), 0.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert!(ScoreMatrix::from_triples(3, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(ScoreMatrix::from_triples(3, vec![(0, 3, 1.0)]).is_err());
        assert!(ScoreMatrix::from_triples(3, vec![(0, 1, -1.0)]).is_err());
    }
}
