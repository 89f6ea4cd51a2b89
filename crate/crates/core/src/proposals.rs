//! Video object proposals: confidence filtering, greedy bidirectional
//! temporal association of detections into tracks, and the split of all
//! superpixels into annotated (proposal-covered) and unlabeled sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{BBox, DetectionRecord, LabelMap};

/// Minimum number of associated detections for a track to be kept.
pub const MIN_TRACK_LEN: usize = 3;

/// Keep detections with `confidence >= min_confidence`, in input order.
pub fn filter_hypotheses(dets: &[DetectionRecord], min_confidence: f64) -> Vec<DetectionRecord> {
    dets.iter()
        .filter(|d| d.confidence >= min_confidence)
        .cloned()
        .collect()
}

/// Intersection over union of two boxes; 0 when either box has zero area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (aa, ab) = (a.area(), b.area());
    if aa <= 0.0 || ab <= 0.0 {
        return 0.0;
    }
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    inter / (aa + ab - inter)
}

/// How the next-frame box is predicted while extending a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionModel {
    /// Next box equals the current box.
    #[default]
    Constant,
    /// Next box is the current box shifted by the last observed displacement.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrackMember {
    pub frame: u32,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Track {
    pub id: usize,
    pub class_id: u32,
    pub members: Vec<TrackMember>,
}

/// Greedy bidirectional association.
///
/// Repeatedly seeds a track with the highest-confidence unconsumed detection
/// from which a track of at least [`MIN_TRACK_LEN`] members can be grown, and
/// consumes its members. A track grows one frame at a time in each direction,
/// taking the unconsumed same-class detection with the highest IoU against
/// the predicted box (ties: higher confidence, then input order), and stops
/// at the first frame without a match at `iou >= iou_thresh`.
pub fn associate(dets: &[DetectionRecord], iou_thresh: f64, motion: MotionModel) -> Vec<Track> {
    let mut by_frame: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, d) in dets.iter().enumerate() {
        by_frame.entry(d.frame).or_default().push(i);
    }
    let mut ranked: Vec<usize> = (0..dets.len()).collect();
    ranked.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence).then(a.cmp(&b)));

    let mut consumed = vec![false; dets.len()];
    let mut tracks = Vec::new();
    loop {
        let grown = ranked.iter().filter(|&&s| !consumed[s]).find_map(|&seed| {
            let members = grow(dets, &by_frame, &consumed, seed, iou_thresh, motion);
            (members.len() >= MIN_TRACK_LEN).then_some((seed, members))
        });
        let Some((seed, members)) = grown else { break };
        for &m in &members {
            consumed[m] = true;
        }
        tracks.push(Track {
            id: tracks.len(),
            class_id: dets[seed].class_id,
            members: members
                .iter()
                .map(|&m| TrackMember {
                    frame: dets[m].frame,
                    bbox: dets[m].bbox,
                    confidence: dets[m].confidence,
                })
                .collect(),
        });
    }
    tracks
}

/// Detection indices of the track grown from `seed`, ordered by frame.
fn grow(
    dets: &[DetectionRecord],
    by_frame: &HashMap<u32, Vec<usize>>,
    consumed: &[bool],
    seed: usize,
    iou_thresh: f64,
    motion: MotionModel,
) -> Vec<usize> {
    let class = dets[seed].class_id;
    let extend = |forward: bool| -> Vec<usize> {
        let mut picked = Vec::new();
        let mut prev: Option<BBox> = None;
        let mut cur = dets[seed].bbox;
        let mut frame = dets[seed].frame;
        loop {
            frame = match (forward, frame) {
                (true, f) => match f.checked_add(1) {
                    Some(f) => f,
                    None => break,
                },
                (false, 0) => break,
                (false, f) => f - 1,
            };
            let predicted = match (motion, prev) {
                (MotionModel::Linear, Some(p)) => cur.translate(cur.x0 - p.x0, cur.y0 - p.y0),
                _ => cur,
            };
            let best = by_frame
                .get(&frame)
                .into_iter()
                .flatten()
                .copied()
                .filter(|&c| !consumed[c] && dets[c].class_id == class)
                .map(|c| (c, iou(&predicted, &dets[c].bbox)))
                .filter(|&(_, o)| o >= iou_thresh)
                .max_by(|&(a, oa), &(b, ob)| {
                    oa.total_cmp(&ob)
                        .then(dets[a].confidence.total_cmp(&dets[b].confidence))
                        .then(b.cmp(&a))
                });
            let Some((c, _)) = best else { break };
            picked.push(c);
            prev = Some(cur);
            cur = dets[c].bbox;
        }
        picked
    };
    let mut backward = extend(false);
    backward.reverse();
    backward.push(seed);
    backward.extend(extend(true));
    backward
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotatedSuperpixel {
    pub index: usize,
    pub class_id: u32,
}

/// Split of all superpixels into annotated (R_D) and unlabeled (R_U) sets.
///
/// Superpixels are indexed globally, frame by frame: superpixel `s` of frame
/// `f` has index `frame_offsets[f] + s`. `background` lists unlabeled
/// superpixels of annotated frames that lie entirely outside every track
/// box; they serve as background exemplars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProposalPartition {
    pub frame_offsets: Vec<usize>,
    pub tracks: Vec<Track>,
    pub annotated: Vec<AnnotatedSuperpixel>,
    pub unlabeled: Vec<usize>,
    pub background: Vec<usize>,
    pub annotated_frames: Vec<u32>,
}

impl ProposalPartition {
    pub fn num_superpixels(&self) -> usize {
        *self.frame_offsets.last().unwrap_or(&0)
    }

    pub fn num_frames(&self) -> usize {
        self.frame_offsets.len().saturating_sub(1)
    }

    /// Frame containing global superpixel `index`.
    pub fn frame_of(&self, index: usize) -> usize {
        self.frame_offsets.partition_point(|&o| o <= index) - 1
    }

    /// Label count: background plus one label per class id up to the largest
    /// class id among tracks.
    pub fn num_labels(&self) -> usize {
        self.tracks.iter().map(|t| t.class_id as usize + 2).max().unwrap_or(1)
    }

    /// Labeled superpixels with their label: class id + 1 for annotated ones,
    /// 0 for background exemplars. Sorted by index.
    pub fn labeled(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .annotated
            .iter()
            .map(|a| (a.index, a.class_id as usize + 1))
            .chain(self.background.iter().map(|&b| (b, 0)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_superpixels();
        if self.frame_offsets.first() != Some(&0)
            || self.frame_offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::validation("frame offsets must start at 0 and be non-decreasing"));
        }
        let mut seen = vec![0u8; n];
        for a in &self.annotated {
            *seen.get_mut(a.index).ok_or_else(|| out_of_range(a.index, n))? += 1;
        }
        for &u in &self.unlabeled {
            *seen.get_mut(u).ok_or_else(|| out_of_range(u, n))? += 1;
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            return Err(Error::validation(format!(
                "superpixel {i} appears {} times across annotated and unlabeled sets",
                seen[i]
            )));
        }
        let frames: BTreeSet<u32> = self.annotated_frames.iter().copied().collect();
        let unlabeled: BTreeSet<usize> = self.unlabeled.iter().copied().collect();
        for a in &self.annotated {
            if !frames.contains(&(self.frame_of(a.index) as u32)) {
                return Err(Error::validation(format!(
                    "annotated superpixel {} lies outside the annotated frames",
                    a.index
                )));
            }
        }
        for &b in &self.background {
            if !unlabeled.contains(&b) || !frames.contains(&(self.frame_of(b) as u32)) {
                return Err(Error::validation(format!(
                    "background exemplar {b} must be unlabeled and in an annotated frame"
                )));
            }
        }
        Ok(())
    }
}

fn out_of_range(i: usize, n: usize) -> Error {
    Error::validation(format!("superpixel index {i} out of range for {n} superpixels"))
}

/// Assign superpixels to R_D when at least `cover_thresh` of their pixels lie
/// inside some track box on their frame. The class is the one whose boxes
/// cover the most of its pixels (ties to the lower class id).
pub fn partition_superpixels(
    tracks: &[Track],
    maps: &[LabelMap],
    cover_thresh: f64,
) -> Result<ProposalPartition> {
    let mut boxes_per_frame: BTreeMap<u32, Vec<(u32, BBox)>> = BTreeMap::new();
    for t in tracks {
        for m in &t.members {
            if m.frame as usize >= maps.len() {
                return Err(Error::validation(format!(
                    "track {} references frame {} but only {} label maps were given",
                    t.id,
                    m.frame,
                    maps.len()
                )));
            }
            boxes_per_frame.entry(m.frame).or_default().push((t.class_id, m.bbox));
        }
    }

    let mut frame_offsets = vec![0];
    for m in maps {
        frame_offsets.push(frame_offsets.last().unwrap() + m.num_labels());
    }

    let mut annotated = Vec::new();
    let mut unlabeled = Vec::new();
    let mut background = Vec::new();
    let mut annotated_frames = Vec::new();
    for (f, map) in maps.iter().enumerate() {
        let offset = frame_offsets[f];
        let k = map.num_labels();
        let Some(boxes) = boxes_per_frame.get(&(f as u32)) else {
            unlabeled.extend(offset..offset + k);
            continue;
        };
        let classes: Vec<u32> = boxes.iter().map(|b| b.0).collect::<BTreeSet<_>>().into_iter().collect();
        let sizes = map.sizes();
        let mut any = vec![0usize; k];
        let mut per_class = vec![0usize; k * classes.len()];
        for y in 0..map.height() {
            for x in 0..map.width() {
                let s = map.get(x, y) as usize;
                let mut hit = false;
                for (ci, &c) in classes.iter().enumerate() {
                    if boxes.iter().any(|(bc, b)| *bc == c && b.contains_pixel(x, y)) {
                        per_class[s * classes.len() + ci] += 1;
                        hit = true;
                    }
                }
                any[s] += hit as usize;
            }
        }
        let mut frame_annotated = false;
        let mut outside = Vec::new();
        for s in 0..k {
            let covered = any[s] as f64 / sizes[s] as f64;
            if any[s] > 0 && covered >= cover_thresh {
                let counts = &per_class[s * classes.len()..(s + 1) * classes.len()];
                // max_by_key keeps the last maximum; scan reversed to prefer the lower class.
                let (ci, _) = counts
                    .iter()
                    .enumerate()
                    .rev()
                    .max_by_key(|&(_, &c)| c)
                    .unwrap();
                annotated.push(AnnotatedSuperpixel {
                    index: offset + s,
                    class_id: classes[ci],
                });
                frame_annotated = true;
            } else {
                unlabeled.push(offset + s);
                if any[s] == 0 {
                    outside.push(offset + s);
                }
            }
        }
        if frame_annotated {
            annotated_frames.push(f as u32);
            background.extend(outside);
        }
    }

    let part = ProposalPartition {
        frame_offsets,
        tracks: tracks.to_vec(),
        annotated,
        unlabeled,
        background,
        annotated_frames,
    };
    part.validate()?;
    Ok(part)
}
