//! Graph-based superpixel segmentation over an 8-connected pixel grid.
//!
//! Pixels are nodes and neighboring pixels are joined by an edge weighted by
//! their color distance. Edges are scanned in non-decreasing weight (ties in
//! edge-index order) and two components merge when the edge is no heavier
//! than either component's internal difference plus `k / |C|`. A second pass
//! over the same edge order absorbs components smaller than `min_size`.
//!
//! Color distances are measured on the 8-bit scale (intensities times 255) so
//! that `k` has the same meaning as in the usual 0-255 image setting.

use crate::error::{Error, Result};
use crate::io::LabelMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("image must be non-empty"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::validation(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::validation(format!(
                "image {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let o = (y * self.width + x) * self.channels;
        &self.data[o..o + self.channels]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SegmentationParams {
    pub sigma: f64,
    pub k: f64,
    pub min_size: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            k: 100.0,
            min_size: 20,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::validation(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::validation(format!("k must be > 0, got {}", self.k)));
        }
        if self.min_size == 0 {
            return Err(Error::validation("min_size must be >= 1"));
        }
        Ok(())
    }
}

/// Disjoint-set forest with union by size; tracks the internal difference
/// (largest merged edge weight) at each root.
struct Forest {
    parent: Vec<usize>,
    size: Vec<usize>,
    internal: Vec<f64>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize, w: f64) {
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.internal[big] = self.internal[big].max(self.internal[small]).max(w);
    }
}

struct Edge {
    a: u32,
    b: u32,
    w: f64,
}

pub fn segment(img: &Image, p: &SegmentationParams) -> Result<LabelMap> {
    p.validate()?;
    let (w, h) = (img.width, img.height);
    let smoothed = smooth(img, p.sigma);

    let mut edges = grid_edges(&smoothed, w, h, img.channels);
    // Stable sort keeps edge-index order among equal weights.
    edges.sort_by(|x, y| x.w.total_cmp(&y.w));

    let mut forest = Forest::new(w * h);
    for e in &edges {
        let (ra, rb) = (forest.find(e.a as usize), forest.find(e.b as usize));
        if ra == rb {
            continue;
        }
        let ta = forest.internal[ra] + p.k / forest.size[ra] as f64;
        let tb = forest.internal[rb] + p.k / forest.size[rb] as f64;
        if e.w <= ta.min(tb) {
            forest.union(ra, rb, e.w);
        }
    }
    for e in &edges {
        let (ra, rb) = (forest.find(e.a as usize), forest.find(e.b as usize));
        if ra != rb && (forest.size[ra] < p.min_size || forest.size[rb] < p.min_size) {
            forest.union(ra, rb, e.w);
        }
    }

    // Relabel by first appearance in raster order.
    let mut remap = vec![u32::MAX; w * h];
    let mut next = 0u32;
    let mut ids = Vec::with_capacity(w * h);
    for px in 0..w * h {
        let r = forest.find(px);
        if remap[r] == u32::MAX {
            remap[r] = next;
            next += 1;
        }
        ids.push(remap[r]);
    }
    LabelMap::new(w, h, ids)
}

fn grid_edges(data: &[f64], w: usize, h: usize, c: usize) -> Vec<Edge> {
    let dist = |p: usize, q: usize| -> f64 {
        let s: f64 = (0..c)
            .map(|ch| {
                let d = data[p * c + ch] - data[q * c + ch];
                d * d
            })
            .sum();
        s.sqrt() * 255.0
    };
    let mut edges = Vec::with_capacity(4 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut push = |q: usize| {
                edges.push(Edge {
                    a: p as u32,
                    b: q as u32,
                    w: dist(p, q),
                })
            };
            if x + 1 < w {
                push(p + 1);
            }
            if y + 1 < h {
                push(p + w);
                if x + 1 < w {
                    push(p + w + 1);
                }
                if x > 0 {
                    push(p + w - 1);
                }
            }
        }
    }
    edges
}

/// Symmetric (edge-repeating) reflection of an out-of-range index.
fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Separable Gaussian blur, kernel truncated at `4 * sigma`. Returns f64 data
/// in the image's channel layout; `sigma == 0` copies the input.
fn smooth(img: &Image, sigma: f64) -> Vec<f64> {
    let src: Vec<f64> = img.data.iter().map(|&v| v as f64).collect();
    if sigma <= 0.0 {
        return src;
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h, c) = (img.width, img.height, img.channels);
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (ki, t) in (-radius..=radius).enumerate() {
                    let xx = reflect(x as isize + t, w);
                    acc += kernel[ki] * src[(y * w + xx) * c + ch];
                }
                tmp[(y * w + x) * c + ch] = acc;
            }
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (ki, t) in (-radius..=radius).enumerate() {
                    let yy = reflect(y as isize + t, h);
                    acc += kernel[ki] * tmp[(yy * w + x) * c + ch];
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    out
}

/// Pixels with a 4-neighbor carrying a different id.
fn boundary_pixels(map: &LabelMap) -> Vec<bool> {
    let (w, h) = (map.width(), map.height());
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let id = map.get(x, y);
            let differs = (x > 0 && map.get(x - 1, y) != id)
                || (x + 1 < w && map.get(x + 1, y) != id)
                || (y > 0 && map.get(x, y - 1) != id)
                || (y + 1 < h && map.get(x, y + 1) != id);
            out[y * w + x] = differs;
        }
    }
    out
}

/// Fraction of ground-truth boundary pixels that have a predicted boundary
/// pixel within one pixel (8-neighborhood). A truth map with no boundary
/// scores 1.
pub fn component_boundary_recall(pred: &LabelMap, truth: &LabelMap) -> Result<f64> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::validation(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        )));
    }
    let (w, h) = (pred.width(), pred.height());
    let pb = boundary_pixels(pred);
    let tb = boundary_pixels(truth);
    let mut total = 0usize;
    let mut hit = 0usize;
    for y in 0..h {
        for x in 0..w {
            if !tb[y * w + x] {
                continue;
            }
            total += 1;
            let near = (y.saturating_sub(1)..=(y + 1).min(h - 1)).any(|yy| {
                (x.saturating_sub(1)..=(x + 1).min(w - 1)).any(|xx| pb[yy * w + xx])
            });
            if near {
                hit += 1;
            }
        }
    }
    Ok(if total == 0 { 1.0 } else { hit as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half_black_half_white(w: usize, h: usize) -> Image {
        let data = (0..w * h)
            .map(|p| if p % w < w / 2 { 0.0 } else { 1.0 })
            .collect();
        Image::new(w, h, 1, data).unwrap()
    }

    fn split_map(w: usize, h: usize, at: usize) -> LabelMap {
        LabelMap::new(w, h, (0..w * h).map(|p| (p % w >= at) as u32).collect()).unwrap()
    }

    #[test]
    fn uniform_image_is_one_segment() {
        let img = Image::new(8, 8, 1, vec![0.5; 64]).unwrap();
        let p = SegmentationParams { sigma: 0.5, k: 100.0, min_size: 1 };
        assert_eq!(segment(&img, &p).unwrap().num_labels(), 1);
    }

    #[test]
    fn half_split_gives_two_segments() {
        // Within each half every edge weighs 0 and merges; the 8x8 halves end
        // with internal difference 0 and size 32, so the weight-255 boundary
        // edges exceed 0 + 1/32 and never merge.
        let p = SegmentationParams { sigma: 0.0, k: 1.0, min_size: 1 };
        let map = segment(&half_black_half_white(8, 8), &p).unwrap();
        assert_eq!(map, split_map(8, 8, 4));
    }

    #[test]
    fn min_size_forces_merge() {
        let p = SegmentationParams { sigma: 0.0, k: 1.0, min_size: 64 };
        assert_eq!(segment(&half_black_half_white(8, 8), &p).unwrap().num_labels(), 1);
    }

    #[test]
    fn rgb_segments() {
        let mut data = Vec::new();
        for p in 0..36 {
            let c = if p % 6 < 3 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
            data.extend_from_slice(&c);
        }
        let img = Image::new(6, 6, 3, data).unwrap();
        let p = SegmentationParams { sigma: 0.0, k: 1.0, min_size: 1 };
        assert_eq!(segment(&img, &p).unwrap(), split_map(6, 6, 3));
    }

    #[test]
    fn smoothing_preserves_constant() {
        let img = Image::new(5, 3, 1, vec![0.25; 15]).unwrap();
        for v in smooth(&img, 1.3) {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(9, 2), 1);
        assert_eq!(reflect(-5, 1), 0);
    }

    #[test]
    fn recall_cases() {
        let truth = split_map(8, 8, 4);
        assert_eq!(component_boundary_recall(&truth, &truth).unwrap(), 1.0);
        let one = LabelMap::new(8, 8, vec![0; 64]).unwrap();
        assert_eq!(component_boundary_recall(&one, &truth).unwrap(), 0.0);
        // Truth boundary pixels sit in columns 3 and 4; the shifted prediction
        // has boundary pixels in columns 4 and 5, so every truth boundary pixel
        // has a predicted one within a pixel.
        let shifted = split_map(8, 8, 5);
        assert_eq!(component_boundary_recall(&shifted, &truth).unwrap(), 1.0);
        // Shifted by two: column 3 has no predicted boundary within reach.
        let far = split_map(8, 8, 6);
        assert_eq!(component_boundary_recall(&far, &truth).unwrap(), 0.5);
        let small = LabelMap::new(4, 4, vec![0; 16]).unwrap();
        assert!(component_boundary_recall(&small, &truth).is_err());
    }

    #[test]
    fn deterministic_and_granularity_monotone_on_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (w, h) = (24, 18);
            let data: Vec<f32> = (0..w * h).map(|_| rng.random::<f32>()).collect();
            let img = Image::new(w, h, 1, data).unwrap();
            let mut last = usize::MAX;
            for k in [10.0, 50.0, 200.0, 800.0] {
                let p = SegmentationParams { sigma: 0.5, k, min_size: 5 };
                let a = segment(&img, &p).unwrap();
                assert_eq!(a, segment(&img, &p).unwrap());
                assert!(a.num_labels() <= last, "k={k}: {} > {last}", a.num_labels());
                last = a.num_labels();
            }
        }
    }

    #[test]
    fn invalid_params() {
        let img = Image::new(2, 2, 1, vec![0.0; 4]).unwrap();
        for p in [
            SegmentationParams { sigma: -1.0, ..Default::default() },
            SegmentationParams { k: 0.0, ..Default::default() },
            SegmentationParams { min_size: 0, ..Default::default() },
        ] {
            assert!(segment(&img, &p).is_err());
        }
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
    }
}
