//! Context exemplars and observed link matrices.
//!
//! An exemplar is an ordered pair of labeled superpixels `(i, j)` from
//! annotated frames; it lands in the set for class pair
//! `(label(i), label(j))`. The link matrix for a class pair has a one at
//! every exemplar position and zeros elsewhere.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proposals::ProposalPartition;

/// Ordered class labels; label 0 is background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::validation(format!(
                "need at least 2 labels (background plus one class), got {}",
                names.len()
            )));
        }
        Ok(Self { names })
    }

    /// `background`, `class0`, `class1`, ... for `count` labels.
    pub fn with_count(count: usize) -> Result<Self> {
        Self::new(
            std::iter::once("background".to_string())
                .chain((0..count.saturating_sub(1)).map(|c| format!("class{c}")))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, label: usize) -> &str {
        &self.names[label]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PairingPolicy {
    /// Pair labeled superpixels across different annotated frames as well.
    pub cross_frame: bool,
    /// Cap on unordered pairs per class pair; excess is subsampled uniformly.
    pub cap: Option<usize>,
    pub seed: u64,
}

impl Default for PairingPolicy {
    fn default() -> Self {
        Self {
            cross_frame: false,
            cap: Some(10_000),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarSet {
    num_labels: usize,
    per_pair: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
}

impl ExemplarSet {
    pub fn new(num_labels: usize) -> Self {
        Self {
            num_labels,
            per_pair: BTreeMap::new(),
        }
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Exemplars of class pair `(m, n)`, sorted.
    pub fn pairs(&self, m: usize, n: usize) -> &[(usize, usize)] {
        self.per_pair.get(&(m, n)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[(usize, usize)])> {
        self.per_pair.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn total(&self) -> usize {
        self.per_pair.values().map(Vec::len).sum()
    }

    /// Insert pairs for class pair `(m, n)`; duplicates are removed.
    pub fn insert(&mut self, m: usize, n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) {
        let entry = self.per_pair.entry((m, n)).or_default();
        entry.extend(pairs);
        entry.sort_unstable();
        entry.dedup();
    }
}

pub fn extract_exemplars(
    part: &ProposalPartition,
    labels: &LabelSet,
    policy: &PairingPolicy,
) -> Result<ExemplarSet> {
    if part.annotated_frames.is_empty() {
        return Err(Error::validation("no annotated frames"));
    }
    let c = labels.len();
    let labeled = part.labeled();
    if let Some(&(i, l)) = labeled.iter().find(|&&(_, l)| l >= c) {
        return Err(Error::validation(format!(
            "superpixel {i} has label {l} but only {c} labels exist"
        )));
    }

    // Groups of superpixels that may be paired with each other.
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for &(i, l) in &labeled {
        let key = if policy.cross_frame { 0 } else { part.frame_of(i) };
        groups.entry(key).or_default().push((i, l));
    }

    // Unordered pairs per unordered class pair (m <= n), oriented so the
    // first element carries label m.
    let mut unordered: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for members in groups.values() {
        let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); c];
        for &(i, l) in members {
            by_label[l].push(i);
        }
        for m in 0..c {
            for n in m..c {
                let out = unordered.entry((m, n)).or_default();
                if m == n {
                    let v = &by_label[m];
                    for a in 0..v.len() {
                        for b in a + 1..v.len() {
                            out.push((v[a], v[b]));
                        }
                    }
                } else {
                    for &i in &by_label[m] {
                        for &j in &by_label[n] {
                            out.push((i, j));
                        }
                    }
                }
            }
        }
    }

    let mut set = ExemplarSet::new(c);
    for ((m, n), mut pairs) in unordered {
        if let Some(cap) = policy.cap {
            if pairs.len() > cap {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    policy.seed ^ ((m as u64) << 32 | n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let mut keep = rand::seq::index::sample(&mut rng, pairs.len(), cap).into_vec();
                keep.sort_unstable();
                pairs = keep.into_iter().map(|k| pairs[k]).collect();
            }
        }
        if m == n {
            set.insert(m, m, pairs.iter().flat_map(|&(i, j)| [(i, j), (j, i)]));
        } else {
            set.insert(m, n, pairs.iter().copied());
            set.insert(n, m, pairs.iter().map(|&(i, j)| (j, i)));
        }
    }
    for m in 0..c {
        for n in 0..c {
            set.per_pair.entry((m, n)).or_default();
        }
    }
    Ok(set)
}

/// Sparse 0/1 matrix of observed links for one class pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkMatrix {
    pair: (usize, usize),
    n: usize,
    entries: Vec<(usize, usize)>,
}

impl LinkMatrix {
    pub fn new(pair: (usize, usize), n: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::validation(format!(
                "link ({i}, {j}) out of range for {n} superpixels"
            )));
        }
        entries.sort_unstable();
        entries.dedup();
        Ok(Self { pair, n, entries })
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.entries.binary_search(&(i, j)).is_ok() {
            1.0
        } else {
            0.0
        }
    }

    /// Column indices of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.entries.partition_point(|&(r, _)| r < i);
        self.entries[start..]
            .iter()
            .take_while(move |&&(r, _)| r == i)
            .map(|&(_, c)| c)
    }

    /// Distinct row indices with at least one link.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.entries.iter().map(|e| e.0).collect();
        rows.dedup();
        rows
    }

    pub fn transpose(&self) -> Self {
        let entries = self.entries.iter().map(|&(i, j)| (j, i)).collect();
        Self::new((self.pair.1, self.pair.0), self.n, entries).expect("transpose stays in range")
    }
}

/// One link matrix per class pair, row-major over `(m, n)`.
pub fn build_link_matrices(ex: &ExemplarSet, n: usize) -> Result<Vec<LinkMatrix>> {
    let c = ex.num_labels();
    let mut out = Vec::with_capacity(c * c);
    for m in 0..c {
        for k in 0..c {
            out.push(LinkMatrix::new((m, k), n, ex.pairs(m, k).to_vec())?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarBlock {
    pub pair: [usize; 2],
    pub links: Vec<[usize; 2]>,
}

/// On-disk form of the observed links (`links.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinksDocument {
    pub n: usize,
    pub num_labels: usize,
    pub exemplars: Vec<ExemplarBlock>,
}

impl LinksDocument {
    pub fn from_links(n: usize, num_labels: usize, links: &[LinkMatrix]) -> Self {
        Self {
            n,
            num_labels,
            exemplars: links
                .iter()
                .map(|l| ExemplarBlock {
                    pair: [l.pair.0, l.pair.1],
                    links: l.entries.iter().map(|&(i, j)| [i, j]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_links(&self) -> Result<Vec<LinkMatrix>> {
        self.exemplars
            .iter()
            .map(|b| {
                if b.pair[0] >= self.num_labels || b.pair[1] >= self.num_labels {
                    return Err(Error::validation(format!(
                        "class pair {:?} out of range for {} labels",
                        b.pair, self.num_labels
                    )));
                }
                LinkMatrix::new(
                    (b.pair[0], b.pair[1]),
                    self.n,
                    b.links.iter().map(|l| (l[0], l[1])).collect(),
                )
            })
            .collect()
    }
}
