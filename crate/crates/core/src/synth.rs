//! Synthetic video fixture: textured background, two moving textured
//! rectangles, detections, superpixel maps, features and ground truth.

use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{
    write_class_mask, write_detections, write_feature_matrix, write_label_map, write_pnm, BBox,
    ClassMask, DetectionRecord, FeatureMatrix, LabelMap,
};
use crate::superpixel::{segment, Image, SegmentationParams};

pub const FRAMES_DIR: &str = "frames";
pub const MAPS_DIR: &str = "maps";
pub const TRUTH_DIR: &str = "truth";
pub const FEATURES_FILE: &str = "features.fmx";
pub const DETECTIONS_FILE: &str = "detections.jsonl";

pub const DETECTION_CONFIDENCE: f64 = 0.9;
pub const DISTRACTOR_CONFIDENCE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SynthConfig {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub feature_dim: usize,
    /// Half-width of the uniform noise added to each feature coordinate.
    pub feature_noise: f64,
    /// Frames `0..annotated_frames` receive object detections.
    pub annotated_frames: usize,
    pub segmentation: SegmentationParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 5,
            width: 64,
            height: 48,
            seed: 0,
            feature_dim: 16,
            feature_noise: 0.25,
            annotated_frames: 4,
            segmentation: SegmentationParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFixture {
    pub frames: Vec<Image>,
    pub maps: Vec<LabelMap>,
    pub truth: Vec<ClassMask>,
    pub features: FeatureMatrix,
    pub detections: Vec<DetectionRecord>,
}

struct MovingRect {
    class_id: u32,
    x: i64,
    y: i64,
    w: i64,
    h: i64,
    dx: i64,
    dy: i64,
    base: f32,
}

impl MovingRect {
    fn at(&self, frame: usize) -> (i64, i64) {
        (self.x + self.dx * frame as i64, self.y + self.dy * frame as i64)
    }

    fn bbox(&self, frame: usize) -> BBox {
        let (x, y) = self.at(frame);
        BBox::new(x as f64, y as f64, (x + self.w) as f64, (y + self.h) as f64)
    }
}

/// Object layout scaled to the frame size; the two paths never overlap.
fn objects(width: usize, height: usize) -> [MovingRect; 2] {
    let (w, h) = (width as i64, height as i64);
    [
        MovingRect { class_id: 0, x: w / 10, y: h / 6, w: w / 4, h: h / 4, dx: 3, dy: 1, base: 0.85 },
        MovingRect { class_id: 1, x: 5 * w / 8, y: h / 2, w: (w * 7) / 32, h: (h * 7) / 24, dx: -1, dy: -1, base: 0.1 },
    ]
}

fn quantize(v: f32) -> f32 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthFixture> {
    if cfg.frames < 3 || cfg.width < 32 || cfg.height < 24 || cfg.feature_dim < 2 {
        return Err(Error::validation(
            "synthetic fixture needs >= 3 frames of at least 32x24 and feature_dim >= 2",
        ));
    }
    if cfg.annotated_frames < 3 || cfg.annotated_frames > cfg.frames {
        return Err(Error::validation("annotated frames must lie in [3, frames]"));
    }
    let last = cfg.frames as i64 - 1;
    let objs = objects(cfg.width, cfg.height);
    for o in &objs {
        let (x1, y1) = o.at(cfg.frames - 1);
        if o.x.min(x1) < 0 || o.y.min(y1) < 0 || o.x.max(x1) + o.w > cfg.width as i64 || o.y.max(y1) + o.h > cfg.height as i64 {
            return Err(Error::validation(format!("too many frames: objects leave the frame by frame {last}")));
        }
    }
    cfg.segmentation.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut frames = Vec::with_capacity(cfg.frames);
    let mut truth = Vec::with_capacity(cfg.frames);
    for f in 0..cfg.frames {
        let mut data = Vec::with_capacity(cfg.width * cfg.height);
        let mut labels = Vec::with_capacity(cfg.width * cfg.height);
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                let tile = (x / 8 + y / 8) % 2;
                let mut v = if tile == 0 { 0.35 } else { 0.5 };
                let mut label = 0;
                for o in &objs {
                    let (ox, oy) = o.at(f);
                    let (rx, ry) = (x as i64 - ox, y as i64 - oy);
                    if (0..o.w).contains(&rx) && (0..o.h).contains(&ry) {
                        // Texture moves with the object.
                        let cell = (rx / 4 + ry / 4) % 2;
                        v = o.base + if cell == 0 { 0.04 } else { -0.04 };
                        label = o.class_id + 1;
                    }
                }
                v += rng.random_range(-0.01f32..0.01);
                data.push(quantize(v));
                labels.push(label);
            }
        }
        frames.push(Image::new(cfg.width, cfg.height, 1, data)?);
        truth.push(ClassMask::new(cfg.width, cfg.height, labels)?);
    }

    let maps = frames
        .iter()
        .map(|img| segment(img, &cfg.segmentation))
        .collect::<Result<Vec<_>>>()?;

    // One prototype per mask value; each superpixel takes the prototype of its
    // majority ground-truth value plus uniform noise.
    let num_values = objs.len() + 1;
    let prototypes: Vec<Vec<f64>> = (0..num_values)
        .map(|_| (0..cfg.feature_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut data = Vec::new();
    for (map, mask) in maps.iter().zip(&truth) {
        let mut counts = vec![vec![0usize; num_values]; map.num_labels()];
        for (&s, &t) in map.ids().iter().zip(mask.values()) {
            counts[s as usize][t as usize] += 1;
        }
        for c in &counts {
            let majority = (0..num_values).fold(0, |best, v| if c[v] > c[best] { v } else { best });
            for &p in &prototypes[majority] {
                data.push((p + rng.random_range(-cfg.feature_noise..=cfg.feature_noise)) as f32);
            }
        }
    }
    let n = data.len() / cfg.feature_dim;
    let mut features = FeatureMatrix::new(n, cfg.feature_dim, data)?;
    features.normalize_rows()?;

    let mut detections = Vec::new();
    for f in 0..cfg.annotated_frames {
        for o in &objs {
            detections.push(DetectionRecord {
                frame: f as u32,
                class_id: o.class_id,
                confidence: DETECTION_CONFIDENCE,
                bbox: o.bbox(f),
            });
        }
    }
    // A low-confidence box on plain background, removed by confidence filtering.
    detections.push(DetectionRecord {
        frame: 1,
        class_id: 0,
        confidence: DISTRACTOR_CONFIDENCE,
        bbox: BBox::new(
            (cfg.width - cfg.width / 5) as f64,
            1.0,
            (cfg.width - 1) as f64,
            (cfg.height / 5) as f64,
        ),
    });

    Ok(SynthFixture { frames, maps, truth, features, detections })
}

pub fn frame_name(f: usize, ext: &str) -> String {
    format!("frame_{f:03}.{ext}")
}

/// Write the fixture in the pipeline's input layout; returns the files written.
pub fn write_fixture(fx: &SynthFixture, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::new();
    for sub in [FRAMES_DIR, MAPS_DIR, TRUTH_DIR] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    for (f, ((img, map), mask)) in fx.frames.iter().zip(&fx.maps).zip(&fx.truth).enumerate() {
        let p = dir.join(FRAMES_DIR).join(frame_name(f, "pgm"));
        write_pnm(img, &p)?;
        written.push(p);
        let p = dir.join(MAPS_DIR).join(frame_name(f, "map"));
        write_label_map(map, &p)?;
        written.push(p);
        let p = dir.join(TRUTH_DIR).join(frame_name(f, "mask"));
        write_class_mask(mask, &p)?;
        written.push(p);
    }
    let p = dir.join(FEATURES_FILE);
    write_feature_matrix(&fx.features, &p)?;
    written.push(p);
    let p = dir.join(DETECTIONS_FILE);
    write_detections(&fx.detections, &p)?;
    written.push(p);
    Ok(written)
}
