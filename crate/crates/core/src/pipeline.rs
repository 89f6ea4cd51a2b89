//! End-to-end run over an input directory.
//!
//! Input layout:
//!
//! ```text
//! frames/*.pgm|*.ppm   frames, optional when maps/ is present
//! maps/*.map           superpixel maps, computed from frames when absent
//! features.fmx         one feature row per superpixel, frame by frame
//!                      (features.csv is accepted too)
//! detections.jsonl     detections; `frame` indexes the sorted frame list
//! truth/*.mask         ground-truth class masks, optional
//! ```
//!
//! Files in each directory are taken in lexicographic order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{PipelineConfig, Topology};
use crate::context::{build_link_matrices, extract_exemplars, LabelSet, LinksDocument};
use crate::crf::{assemble_energy, train_unary, unary_potentials, PairTopology, UnaryModel};
use crate::error::{Error, Result, StageContext};
use crate::eval::{evaluate, EvaluationReport};
use crate::inference::{alpha_expansion, ExpansionResult};
use crate::io::{
    read_class_mask, read_detections, read_feature_matrix, read_label_map, read_pnm, write_class_mask,
    write_feature_matrix, write_graph, write_json, write_label_map, write_pnm, write_scores, ClassMask,
    FeatureMatrix, LabelMap,
};
use crate::overlay::emit_overlay;
use crate::propagation::{compute_context_scores, PropagationReport};
use crate::proposals::{associate, filter_hypotheses, partition_superpixels, ProposalPartition};
use crate::simgraph::build_knn_graph;
use crate::superpixel::{segment, Image};
use crate::synth::{frame_name, DETECTIONS_FILE, FEATURES_FILE, FRAMES_DIR, MAPS_DIR, TRUTH_DIR};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";
pub const SEGMENTATION_DIR: &str = "segmentation";
pub const OVERLAY_DIR: &str = "overlays";

/// Sorted files in `dir` with one of the given extensions; empty when `dir`
/// does not exist.
pub fn list_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && exts.contains(&ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_label_maps(dir: &Path) -> Result<Vec<LabelMap>> {
    list_files(dir, &["map"])?.iter().map(read_label_map).collect()
}

pub fn read_class_masks(dir: &Path) -> Result<Vec<ClassMask>> {
    list_files(dir, &["mask", "map"])?.iter().map(read_class_mask).collect()
}

/// Pixel masks from a superpixel labeling; `labels` is indexed globally,
/// frame by frame.
pub fn labels_to_masks(maps: &[LabelMap], labels: &[usize]) -> Result<Vec<ClassMask>> {
    let total: usize = maps.iter().map(LabelMap::num_labels).sum();
    if total != labels.len() {
        return Err(Error::validation(format!(
            "{} superpixel labels for {total} superpixels",
            labels.len()
        )));
    }
    let mut offset = 0;
    let mut out = Vec::with_capacity(maps.len());
    for m in maps {
        let values = m.ids().iter().map(|&s| labels[offset + s as usize] as u32).collect();
        out.push(ClassMask::new(m.width(), m.height(), values)?);
        offset += m.num_labels();
    }
    Ok(out)
}

/// Labeling written by the segmentation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SegmentationOutput {
    pub num_labels: usize,
    pub beta: f64,
    pub pairs: usize,
    pub result: ExpansionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub seed: u64,
    pub config: PipelineConfig,
    pub files: Vec<ManifestEntry>,
    /// Outputs whose content varies between runs (wall-clock timings).
    pub unhashed: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub segmentation: SegmentationOutput,
    pub propagation: PropagationReport,
    pub report: Option<EvaluationReport>,
    pub manifest: Manifest,
    pub timing: BTreeMap<String, f64>,
}

struct Run<'a> {
    out: &'a Path,
    written: Vec<PathBuf>,
    timing: BTreeMap<String, f64>,
}

impl Run<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn mkdir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let r = f(self);
        self.timing.insert(stage.to_string(), start.elapsed().as_secs_f64());
        r
    }
}

/// Run every stage over `inputs`, writing artifacts, a manifest and timings to `out`.
pub fn run_pipeline(cfg: &PipelineConfig, inputs: &Path, out: &Path) -> Result<PipelineOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut run = Run { out, written: Vec::new(), timing: BTreeMap::new() };

    let (frames, maps) = run.timed("superpixels", |run| {
        let frames_dir = inputs.join(FRAMES_DIR);
        let frames: Vec<Image> = list_files(&frames_dir, &["pgm", "ppm"])?
            .iter()
            .map(|p| read_pnm(p).stage("superpixels", Some(p.clone())))
            .collect::<Result<_>>()?;
        let maps_dir = inputs.join(MAPS_DIR);
        let maps = read_label_maps(&maps_dir).stage("superpixels", Some(maps_dir.clone()))?;
        if !maps.is_empty() {
            return Ok((frames, maps));
        }
        if frames.is_empty() {
            return Err(Error::validation("no frames and no superpixel maps found"))
                .stage("superpixels", Some(inputs.to_path_buf()));
        }
        let dir = run.mkdir(MAPS_DIR)?;
        let mut maps = Vec::with_capacity(frames.len());
        for (f, img) in frames.iter().enumerate() {
            let map = segment(img, &cfg.superpixel).stage("superpixels", None)?;
            let p = dir.join(frame_name(f, "map"));
            write_label_map(&map, &p)?;
            run.written.push(p);
            maps.push(map);
        }
        Ok((frames, maps))
    })?;
    if !frames.is_empty() && frames.len() != maps.len() {
        return Err(Error::validation(format!("{} frames but {} superpixel maps", frames.len(), maps.len())))
            .stage("superpixels", Some(inputs.to_path_buf()));
    }

    let part = run.timed("propose", |run| {
        let dets_path = inputs.join(DETECTIONS_FILE);
        let dets = read_detections(&dets_path).stage("propose", Some(dets_path.clone()))?;
        let kept = filter_hypotheses(&dets, cfg.proposals.min_confidence);
        let tracks = associate(&kept, cfg.proposals.iou_threshold, cfg.proposals.motion);
        let part = partition_superpixels(&tracks, &maps, cfg.proposals.cover_threshold)
            .stage("propose", Some(dets_path))?;
        let p = run.path("partition.json");
        write_json(&part, &p)?;
        run.written.push(p);
        Ok(part)
    })?;
    let num_labels = part.num_labels();

    let (features, graph) = run.timed("graph", |run| {
        let fpath = [FEATURES_FILE, "features.csv"]
            .iter()
            .map(|f| inputs.join(f))
            .find(|p| p.is_file())
            .unwrap_or_else(|| inputs.join(FEATURES_FILE));
        let mut features = read_feature_matrix(&fpath).stage("graph", Some(fpath.clone()))?;
        if features.rows() != part.num_superpixels() {
            return Err(Error::validation(format!(
                "{} feature rows for {} superpixels",
                features.rows(),
                part.num_superpixels()
            )))
            .stage("graph", Some(fpath));
        }
        features.normalize_rows().stage("graph", Some(fpath))?;
        let graph = build_knn_graph(&features, cfg.graph.k).stage("graph", None)?;
        let p = run.path("graph.bin");
        write_graph(&graph, &p)?;
        run.written.push(p);
        Ok((features, graph))
    })?;

    let links = run.timed("context", |run| {
        let labels = LabelSet::with_count(num_labels).stage("context", None)?;
        let ex = extract_exemplars(&part, &labels, &cfg.context).stage("context", None)?;
        let links = build_link_matrices(&ex, part.num_superpixels()).stage("context", None)?;
        let p = run.path("links.json");
        write_json(&LinksDocument::from_links(part.num_superpixels(), num_labels, &links), &p)?;
        run.written.push(p);
        Ok(links)
    })?;

    let (scores, prop_report) = run.timed("propagate", |run| {
        let labeled: Vec<usize> = part.labeled().into_iter().map(|(i, _)| i).collect();
        let (scores, report) = compute_context_scores(&graph, &links, &labeled, num_labels, &cfg.propagation)
            .stage("propagate", None)?;
        let p = run.path("propagation.json");
        write_json(&report, &p)?;
        run.written.push(p.clone());
        if !report.converged() {
            let iterations = report
                .pairs
                .iter()
                .map(|r| r.row_stage.max_iterations.max(r.column_stage.max_iterations))
                .max()
                .unwrap_or(0);
            return Err(Error::NonConvergence { stage: "link propagation".into(), iterations })
                .stage("propagate", Some(p));
        }
        let p = run.path("scores.bin");
        write_scores(&scores, &p)?;
        run.written.push(p);
        Ok((scores, report))
    })?;

    let segmentation = run.timed("segment", |run| {
        let model = train_unary(&features, &part, num_labels, &cfg.unary).stage("segment", None)?;
        let p = run.path("unary_model.json");
        write_json(&model, &p)?;
        run.written.push(p);
        let unary = unary_potentials(&model, &features).stage("segment", None)?;
        let p = run.path("unary.fmx");
        write_feature_matrix(&unary.to_feature_matrix()?, &p)?;
        run.written.push(p);
        let output = segment_with_unary(cfg, unary, &scores, &graph)?;
        let p = run.path("labels.json");
        write_json(&output, &p)?;
        run.written.push(p);

        let masks = labels_to_masks(&maps, &output.result.labeling).stage("segment", None)?;
        let dir = run.mkdir(SEGMENTATION_DIR)?;
        for (f, m) in masks.iter().enumerate() {
            let p = dir.join(frame_name(f, "mask"));
            write_class_mask(m, &p)?;
            run.written.push(p);
        }
        if !frames.is_empty() {
            let dir = run.mkdir(OVERLAY_DIR)?;
            for (f, (img, m)) in frames.iter().zip(&masks).enumerate() {
                let p = dir.join(frame_name(f, "ppm"));
                write_pnm(&emit_overlay(img, m).stage("segment", None)?, &p)?;
                run.written.push(p);
            }
        }
        Ok((output, masks))
    })?;
    let (segmentation, masks) = segmentation;

    let report = run.timed("evaluate", |run| {
        let truth_dir = inputs.join(TRUTH_DIR);
        let truth = read_class_masks(&truth_dir).stage("evaluate", Some(truth_dir.clone()))?;
        if truth.is_empty() {
            return Ok(None);
        }
        let report = evaluate(&masks, &truth).stage("evaluate", Some(truth_dir))?;
        let p = run.path("report.json");
        write_json(&report, &p)?;
        run.written.push(p);
        Ok(Some(report))
    })?;

    let p = run.path("config.toml");
    cfg.save(&p)?;
    run.written.push(p);

    write_json(&run.timing, run.path(TIMING_FILE))?;
    let mut files = Vec::with_capacity(run.written.len());
    for p in &run.written {
        let (sha256, bytes) = sha256_file(p)?;
        let rel = p.strip_prefix(out).unwrap_or(p);
        let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        files.push(ManifestEntry { path, sha256, bytes });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest { seed: cfg.seed, config: cfg.clone(), files, unhashed: vec![TIMING_FILE.to_string()] };
    write_json(&manifest, run.path(MANIFEST_FILE))?;

    let mut report = report;
    if let Some(r) = report.as_mut() {
        r.timing = run.timing.clone();
    }
    Ok(PipelineOutcome { segmentation, propagation: prop_report, report, manifest, timing: run.timing })
}

/// Unary potentials, energy assembly and alpha-expansion.
pub fn segment_superpixels(
    cfg: &PipelineConfig,
    model: &UnaryModel,
    features: &FeatureMatrix,
    scores: &crate::propagation::ContextScores,
    graph: &crate::simgraph::SimilarityGraph,
) -> Result<SegmentationOutput> {
    let unary = unary_potentials(model, features).stage("segment", None)?;
    segment_with_unary(cfg, unary, scores, graph)
}

pub fn segment_with_unary(
    cfg: &PipelineConfig,
    unary: crate::crf::UnaryTable,
    scores: &crate::propagation::ContextScores,
    graph: &crate::simgraph::SimilarityGraph,
) -> Result<SegmentationOutput> {
    let num_labels = unary.num_labels();
    let topology = match cfg.crf.topology {
        Topology::Dense => PairTopology::Dense,
        Topology::Sparse => PairTopology::Sparse { graph, score_floor: cfg.crf.score_floor },
    };
    let energy = assemble_energy(unary, scores, topology).stage("segment", None)?;
    let result = alpha_expansion(&energy, None, cfg.crf.max_sweeps).stage("segment", None)?;
    Ok(SegmentationOutput { num_labels, beta: energy.beta(), pairs: energy.pairs().len(), result })
}

/// Partition helper shared with the command line.
pub fn propose_from_files(
    cfg: &PipelineConfig,
    detections: &Path,
    maps_dir: &Path,
) -> Result<ProposalPartition> {
    let dets = read_detections(detections).stage("propose", Some(detections.to_path_buf()))?;
    let maps = read_label_maps(maps_dir).stage("propose", Some(maps_dir.to_path_buf()))?;
    if maps.is_empty() {
        return Err(Error::validation("no superpixel maps found")).stage("propose", Some(maps_dir.to_path_buf()));
    }
    let kept = filter_hypotheses(&dets, cfg.proposals.min_confidence);
    let tracks = associate(&kept, cfg.proposals.iou_threshold, cfg.proposals.motion);
    partition_superpixels(&tracks, &maps, cfg.proposals.cover_threshold).stage("propose", None)
}
