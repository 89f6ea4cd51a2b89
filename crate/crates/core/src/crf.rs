//! Pairwise CRF energy: unary terms from a linear classifier, pairwise terms
//! from learned context scores.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FeatureMatrix;
use crate::propagation::ContextScores;
use crate::proposals::ProposalPartition;
use crate::simgraph::SimilarityGraph;

/// Upper clamp on unary potentials.
pub const PSI_MAX: f64 = 20.0;
/// Lower guard on the adaptive normalizer.
pub const BETA_FLOOR: f64 = 1e-12;
/// Largest superpixel count accepted by [`PairTopology::Dense`].
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub lambda: f64,
    pub seed: u64,
    /// Per-label cap on training samples; larger classes are subsampled.
    pub max_samples_per_class: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1.0, epochs: 200, lambda: 1e-4, seed: 0, max_samples_per_class: Some(5000) }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::validation("lambda must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        if self.max_samples_per_class == Some(0) {
            return Err(Error::validation("max samples per class must be >= 1"));
        }
        Ok(())
    }
}

/// One-vs-rest linear scorer; row `c` of `weights` holds `d` feature weights
/// followed by the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnaryModel {
    pub num_labels: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub config: TrainConfig,
}

impl UnaryModel {
    pub fn class_weights(&self, c: usize) -> &[f64] {
        &self.weights[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    /// Class margins of one feature vector.
    pub fn margins(&self, x: &[f32]) -> Vec<f64> {
        (0..self.num_labels)
            .map(|c| {
                let w = self.class_weights(c);
                x.iter().zip(w).map(|(&a, &b)| a as f64 * b).sum::<f64>() + w[self.dim]
            })
            .collect()
    }

    pub fn predict(&self, x: &[f32]) -> usize {
        argmax(&self.margins(x))
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Training samples as `(row, label)`: annotated superpixels and background
/// exemplars of the annotated frames.
pub fn training_samples(part: &ProposalPartition) -> Vec<(usize, usize)> {
    part.labeled()
}

/// Train on labeled superpixels of the partition.
pub fn train_unary(
    f: &FeatureMatrix,
    part: &ProposalPartition,
    num_labels: usize,
    cfg: &TrainConfig,
) -> Result<UnaryModel> {
    train_on_samples(f, &training_samples(part), num_labels, cfg)
}

/// Full-batch Pegasos: at epoch `t` step `lr / (lambda t)` along the
/// regularized hinge subgradient, then project onto the ball of radius
/// `1 / sqrt(lambda)`.
pub fn train_on_samples(
    f: &FeatureMatrix,
    samples: &[(usize, usize)],
    num_labels: usize,
    cfg: &TrainConfig,
) -> Result<UnaryModel> {
    cfg.validate()?;
    let d = f.dim();
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); num_labels];
    for &(row, label) in samples {
        if row >= f.rows() || label >= num_labels {
            return Err(Error::validation(format!(
                "training sample ({row}, label {label}) out of range"
            )));
        }
        by_label[label].push(row);
    }
    let missing: Vec<usize> = (0..num_labels).filter(|&c| by_label[c].is_empty()).collect();
    if !missing.is_empty() {
        return Err(Error::validation(format!("labels without training samples: {missing:?}")));
    }
    if let Some(cap) = cfg.max_samples_per_class {
        for (label, rows) in by_label.iter_mut().enumerate() {
            if rows.len() > cap {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(label as u64));
                let mut keep = rand::seq::index::sample(&mut rng, rows.len(), cap).into_vec();
                keep.sort_unstable();
                *rows = keep.into_iter().map(|k| rows[k]).collect();
            }
        }
    }
    let set: Vec<(usize, usize)> = by_label
        .iter()
        .enumerate()
        .flat_map(|(label, rows)| rows.iter().map(move |&r| (r, label)))
        .collect();

    let weights: Vec<Vec<f64>> = (0..num_labels)
        .into_par_iter()
        .map(|c| train_binary(f, &set, c, cfg))
        .collect();
    Ok(UnaryModel { num_labels, dim: d, weights: weights.concat(), config: *cfg })
}

fn train_binary(f: &FeatureMatrix, set: &[(usize, usize)], positive: usize, cfg: &TrainConfig) -> Vec<f64> {
    let d = f.dim();
    let n = set.len() as f64;
    let radius = 1.0 / cfg.lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    for t in 1..=cfg.epochs {
        grad.iter_mut().zip(&w).for_each(|(g, &wi)| *g = cfg.lambda * wi);
        for &(row, label) in set {
            let y = if label == positive { 1.0 } else { -1.0 };
            let x = f.row(row);
            let m = x.iter().zip(&w).map(|(&a, &b)| a as f64 * b).sum::<f64>() + w[d];
            if y * m < 1.0 {
                for (g, &a) in grad.iter_mut().zip(x) {
                    *g -= y * a as f64 / n;
                }
                grad[d] -= y / n;
            }
        }
        let eta = cfg.learning_rate / (cfg.lambda * t as f64);
        w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= eta * g);
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            let s = radius / norm;
            w.iter_mut().for_each(|v| *v *= s);
        }
    }
    w
}

/// N x C table of unary potentials, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryTable {
    n: usize,
    c: usize,
    values: Vec<f64>,
}

impl UnaryTable {
    pub fn new(n: usize, c: usize, values: Vec<f64>) -> Result<Self> {
        if c == 0 || values.len() != n * c {
            return Err(Error::validation(format!(
                "unary table of {} values does not match {n} x {c}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("unary potentials must be finite"));
        }
        Ok(Self { n, c, values })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn num_labels(&self) -> usize {
        self.c
    }

    pub fn get(&self, i: usize, label: usize) -> f64 {
        self.values[i * self.c + label]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.c..(i + 1) * self.c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Label with the lowest potential per row, ties to the lower label.
    pub fn argmin(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                let r = self.row(i);
                let mut best = 0;
                for (l, &v) in r.iter().enumerate() {
                    if v < r[best] {
                        best = l;
                    }
                }
                best
            })
            .collect()
    }

    pub fn to_feature_matrix(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::new(self.n, self.c, self.values.iter().map(|&v| v as f32).collect())
    }

    pub fn from_feature_matrix(m: &FeatureMatrix) -> Result<Self> {
        Self::new(m.rows(), m.dim(), m.data().iter().map(|&v| v as f64).collect())
    }
}

/// `psi_c = -log softmax(m)_c`, clamped to `[0, PSI_MAX]`.
pub fn potentials_from_margins(margins: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(margins);
    margins.iter().map(|&m| (lse - m).clamp(0.0, PSI_MAX)).collect()
}

pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(margins);
    margins.iter().map(|&m| (m - lse).exp()).collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

pub fn unary_potentials(m: &UnaryModel, f: &FeatureMatrix) -> Result<UnaryTable> {
    if f.dim() != m.dim {
        return Err(Error::validation(format!(
            "features have dimension {} but the model expects {}",
            f.dim(),
            m.dim
        )));
    }
    let values: Vec<f64> = (0..f.rows())
        .into_par_iter()
        .flat_map_iter(|i| potentials_from_margins(&m.margins(f.row(i))))
        .collect();
    UnaryTable::new(f.rows(), m.num_labels, values)
}

/// `exp(-s^2 / (2 beta))`.
pub fn pairwise_potential(s: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::validation(format!("beta must be positive, got {beta}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::validation(format!("score must be finite and >= 0, got {s}")));
    }
    Ok((-s * s / (2.0 * beta)).exp())
}

/// Mean of `S^2` over every listed superpixel pair and every label pair,
/// floored at [`BETA_FLOOR`].
pub fn compute_beta(scores: &ContextScores, pairs: &[(usize, usize)]) -> f64 {
    let c = scores.num_labels();
    if pairs.is_empty() || c == 0 {
        return BETA_FLOOR;
    }
    // Collected before summing so the result does not depend on thread count.
    let terms: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut acc = 0.0;
            for a in 0..c {
                for b in 0..c {
                    let s = scores.get(a, b, i, j);
                    acc += s * s;
                }
            }
            acc
        })
        .collect();
    let sum: f64 = terms.iter().sum();
    (sum / (pairs.len() * c * c) as f64).max(BETA_FLOOR)
}

/// Which superpixel pairs enter the energy.
#[derive(Debug, Clone, Copy)]
pub enum PairTopology<'a> {
    /// Every pair with a nonzero score for some label pair.
    Dense,
    /// Similarity-graph edges plus every pair with some score above the floor.
    Sparse { graph: &'a SimilarityGraph, score_floor: f64 },
}

/// Candidate pairs `(i, j)` with `i < j` under a topology, sorted.
pub fn pair_list(scores: &ContextScores, topology: PairTopology<'_>) -> Result<Vec<(usize, usize)>> {
    let n = scores.size();
    let floor = match topology {
        PairTopology::Dense => {
            if n > DENSE_LIMIT {
                return Err(Error::validation(format!(
                    "dense pair topology supports at most {DENSE_LIMIT} superpixels, got {n}"
                )));
            }
            0.0
        }
        PairTopology::Sparse { graph, score_floor } => {
            if graph.node_count() != n {
                return Err(Error::validation("graph and scores disagree on superpixel count"));
            }
            score_floor
        }
    };
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (_, block) in scores.iter() {
        for (i, j, v) in block.iter() {
            if i != j && v > floor {
                pairs.push((i.min(j) as u32, i.max(j) as u32));
            }
        }
    }
    if let PairTopology::Sparse { graph, .. } = topology {
        pairs.extend(graph.edges().map(|(i, j, _)| (i as u32, j as u32)));
    }
    pairs.par_sort_unstable();
    pairs.dedup();
    Ok(pairs.into_iter().map(|(i, j)| (i as usize, j as usize)).collect())
}

/// Energy `E(x) = sum_i psi_i(x_i) + sum_(i,j) phi_ij(x_i, x_j)` with a full
/// C x C table of pairwise potentials per stored pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    unary: UnaryTable,
    pairs: Vec<(usize, usize)>,
    phi: Vec<f64>,
    beta: f64,
}

impl EnergyModel {
    /// `phi` holds one row-major C x C table per pair.
    pub fn new(unary: UnaryTable, pairs: Vec<(usize, usize)>, phi: Vec<f64>, beta: f64) -> Result<Self> {
        let c = unary.num_labels();
        let n = unary.rows();
        if phi.len() != pairs.len() * c * c {
            return Err(Error::validation("pairwise tables do not match the pair list"));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("pairwise potentials must be finite"));
        }
        if !(beta > 0.0) {
            return Err(Error::validation("beta must be positive"));
        }
        let mut seen = pairs.clone();
        seen.sort_unstable();
        for (k, &(i, j)) in seen.iter().enumerate() {
            if !(i < j && j < n) {
                return Err(Error::validation(format!("pair ({i}, {j}) must satisfy i < j < {n}")));
            }
            if k > 0 && seen[k - 1] == (i, j) {
                return Err(Error::validation(format!("pair ({i}, {j}) stored twice")));
            }
        }
        Ok(Self { unary, pairs, phi, beta })
    }

    pub fn num_nodes(&self) -> usize {
        self.unary.rows()
    }

    pub fn num_labels(&self) -> usize {
        self.unary.num_labels()
    }

    pub fn unary(&self) -> &UnaryTable {
        &self.unary
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `phi` of pair `k` for labels `(a, b)` at `(i, j)`.
    pub fn phi(&self, k: usize, a: usize, b: usize) -> f64 {
        let c = self.num_labels();
        self.phi[k * c * c + a * c + b]
    }

    pub fn phi_table(&self, k: usize) -> &[f64] {
        let c2 = self.num_labels() * self.num_labels();
        &self.phi[k * c2..(k + 1) * c2]
    }

    /// Adjacency: for each node, `(pair index, other node, node is first)`.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize, bool)>> {
        let mut out = vec![Vec::new(); self.num_nodes()];
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            out[i].push((k, j, true));
            out[j].push((k, i, false));
        }
        out
    }
}

/// Build the energy from unary potentials and context scores. The score for
/// labels `(a, b)` at `(i, j)` is block `(a, b)` entry `(i, j)`.
pub fn assemble_energy(
    unary: UnaryTable,
    scores: &ContextScores,
    topology: PairTopology<'_>,
) -> Result<EnergyModel> {
    let c = unary.num_labels();
    if unary.rows() != scores.size() || scores.num_labels() != c {
        return Err(Error::validation(format!(
            "unary table {} x {c} does not match scores over {} superpixels and {} labels",
            unary.rows(),
            scores.size(),
            scores.num_labels()
        )));
    }
    let pairs = pair_list(scores, topology)?;
    let beta = compute_beta(scores, &pairs);
    let phi: Vec<f64> = pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| {
            (0..c * c).map(move |ab| {
                let s = scores.get(ab / c, ab % c, i, j);
                (-s * s / (2.0 * beta)).exp()
            })
        })
        .collect();
    EnergyModel::new(unary, pairs, phi, beta)
}

pub fn energy_of(e: &EnergyModel, x: &[usize]) -> Result<f64> {
    let c = e.num_labels();
    if x.len() != e.num_nodes() {
        return Err(Error::validation(format!(
            "labeling has {} entries for {} nodes",
            x.len(),
            e.num_nodes()
        )));
    }
    if let Some(i) = x.iter().position(|&l| l >= c) {
        return Err(Error::validation(format!("label {} at node {i} out of range for {c} labels", x[i])));
    }
    Ok(energy_unchecked(e, x))
}

pub(crate) fn energy_unchecked(e: &EnergyModel, x: &[usize]) -> f64 {
    let unary: f64 = x.iter().enumerate().map(|(i, &l)| e.unary.get(i, l)).sum();
    let pairwise: f64 = e.pairs.iter().enumerate().map(|(k, &(i, j))| e.phi(k, x[i], x[j])).sum();
    unary + pairwise
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::ScoreMatrix;

    #[test]
    fn softmax_closed_form() {
        let psi = potentials_from_margins(&[1.0, 0.0]);
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        assert!((psi[0] + sig(1.0).ln()).abs() < 1e-12);
        assert!((psi[1] + sig(-1.0).ln()).abs() < 1e-12);
        assert!((psi[0] - 0.3133).abs() < 1e-4 && (psi[1] - 1.3133).abs() < 1e-4);
    }

    #[test]
    fn equal_margins_give_log_c() {
        for c in 1..6 {
            for v in potentials_from_margins(&vec![0.7; c]) {
                assert!((v - (c as f64).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn large_gap_clamps() {
        let psi = potentials_from_margins(&[50.0, 0.0, 0.0]);
        // -log softmax of the winner is log(1 + 2 e^-50).
        assert!((psi[0] - (2.0 * (-50f64).exp()).ln_1p()).abs() < 1e-15);
        assert_eq!(psi[1], PSI_MAX);
        assert_eq!(psi[2], PSI_MAX);
    }

    #[test]
    fn pairwise_values() {
        assert_eq!(pairwise_potential(0.0, 0.3).unwrap(), 1.0);
        let beta: f64 = 0.7;
        let s = (2.0 * beta).sqrt();
        assert!((pairwise_potential(s, beta).unwrap() - (-1f64).exp()).abs() < 1e-12);
        assert!(pairwise_potential(0.2, 1.0).unwrap() > pairwise_potential(0.3, 1.0).unwrap());
        assert!(pairwise_potential(0.2, 0.0).is_err());
        assert!(pairwise_potential(-0.2, 1.0).is_err());
    }

    fn scores_with(n: usize, c: usize, entries: &[((usize, usize), usize, usize, f64)]) -> ContextScores {
        let mut s = ContextScores::new(n, c);
        for a in 0..c {
            for b in 0..c {
                let t: Vec<_> = entries
                    .iter()
                    .filter(|e| e.0 == (a, b))
                    .map(|e| (e.1, e.2, e.3))
                    .collect();
                s.insert((a, b), ScoreMatrix::from_triples(n, t).unwrap()).unwrap();
            }
        }
        s
    }

    #[test]
    fn beta_means_and_guard() {
        let ones = scores_with(2, 1, &[((0, 0), 0, 1, 1.0)]);
        assert_eq!(compute_beta(&ones, &[(0, 1)]), 1.0);
        let half = scores_with(3, 1, &[((0, 0), 0, 1, 1.0)]);
        assert_eq!(compute_beta(&half, &[(0, 1), (1, 2)]), 0.5);
        let zero = scores_with(2, 2, &[]);
        assert_eq!(compute_beta(&zero, &[(0, 1)]), BETA_FLOOR);
    }

    #[test]
    fn two_node_energy_table() {
        // psi = [[1, 2], [0.5, 0.25]]; S(0,1) for label pairs (a,b).
        let unary = UnaryTable::new(2, 2, vec![1.0, 2.0, 0.5, 0.25]).unwrap();
        let s = [[0.0, 1.0], [0.5, 2.0]];
        let entries: Vec<_> = (0..2)
            .flat_map(|a| (0..2).map(move |b| ((a, b), 0, 1, s[a][b])))
            .collect();
        let scores = scores_with(2, 2, &entries);
        let e = assemble_energy(unary, &scores, PairTopology::Dense).unwrap();
        let beta = (0.0 + 1.0 + 0.25 + 4.0) / 4.0;
        assert_eq!(e.beta(), beta);
        let psi = [[1.0, 2.0], [0.5, 0.25]];
        for a in 0..2 {
            for b in 0..2 {
                let expect = psi[0][a] + psi[1][b] + (-s[a][b] * s[a][b] / (2.0 * beta)).exp();
                assert!((energy_of(&e, &[a, b]).unwrap() - expect).abs() < 1e-12);
            }
        }
        assert!(energy_of(&e, &[0]).is_err());
        assert!(energy_of(&e, &[0, 2]).is_err());
    }

    #[test]
    fn zero_scores_reduce_to_unary_plus_pair_count() {
        let n = 4;
        let unary = UnaryTable::new(n, 2, vec![0.5; 8]).unwrap();
        let f = FeatureMatrix::new(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let g = crate::simgraph::build_knn_graph(&f, 1).unwrap();
        let scores = scores_with(n, 2, &[]);
        let e = assemble_energy(unary, &scores, PairTopology::Sparse { graph: &g, score_floor: 1e-4 }).unwrap();
        assert_eq!(e.pairs(), &[(0, 1), (2, 3)]);
        assert_eq!(energy_of(&e, &[0, 1, 1, 0]).unwrap(), 4.0 * 0.5 + 2.0);
    }

    #[test]
    fn model_construction_checks() {
        let u = || UnaryTable::new(3, 2, vec![0.0; 6]).unwrap();
        assert!(EnergyModel::new(u(), vec![(1, 0)], vec![1.0; 4], 1.0).is_err());
        assert!(EnergyModel::new(u(), vec![(0, 1), (0, 1)], vec![1.0; 8], 1.0).is_err());
        assert!(EnergyModel::new(u(), vec![(0, 3)], vec![1.0; 4], 1.0).is_err());
        assert!(EnergyModel::new(u(), vec![(0, 1)], vec![1.0; 3], 1.0).is_err());
        assert!(EnergyModel::new(u(), vec![(0, 2)], vec![1.0; 4], 1.0).is_ok());
    }

    #[test]
    fn missing_class_is_named() {
        let f = FeatureMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let err = train_on_samples(&f, &[(0, 0), (1, 2)], 3, &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("[1]"), "{err}");
    }

    #[test]
    fn unary_table_fmx_round_trip() {
        let t = UnaryTable::new(2, 3, vec![0.5, 1.0, 2.0, 0.0, 0.25, 20.0]).unwrap();
        let back = UnaryTable::from_feature_matrix(&t.to_feature_matrix().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.argmin(), vec![0, 0]);
    }
}
