//! File formats: features, label maps, detections, images, graphs and scores.

mod detections;
mod features;
mod graph;
mod labelmap;
mod pnm;
mod scores;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Location, Result};

/// Largest node count accepted when reading graph and score files.
pub const MAX_NODES: usize = 1 << 24;

fn check_node_count(n: usize, at: usize) -> Result<()> {
    if n > MAX_NODES {
        return Err(Error::parse(Location::Byte(at), format!("node count {n} exceeds the limit of {MAX_NODES}")));
    }
    Ok(())
}

pub use detections::{parse_detections, read_detections, write_detections, BBox, DetectionRecord};
pub use features::{read_feature_matrix, write_feature_matrix, FeatureMatrix, FMX_MAGIC};
pub use graph::{graph_from_bytes, graph_to_bytes, read_graph, write_graph, GRAPH_MAGIC};
pub use labelmap::{
    read_class_mask, read_label_map, write_class_mask, write_label_map, ClassMask, LabelMap,
};
pub use pnm::{parse_pnm, read_pnm, to_pnm_text, write_pnm};
pub use scores::{read_scores, scores_from_bytes, scores_to_bytes, write_scores, SCORES_MAGIC};

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(Location::Line(e.line()), e.to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::validation(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Little-endian cursor over a binary artifact that reports byte offsets.
struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4], what: &'static str) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != magic {
            return Err(Error::parse(Location::Byte(0), format!("bad {what} magic")));
        }
        Ok(Self { bytes, pos: 4, what })
    }

    fn take4(&mut self) -> Result<[u8; 4]> {
        let chunk = self.bytes.get(self.pos..self.pos + 4).ok_or_else(|| {
            Error::parse(Location::Byte(self.pos), format!("truncated {}", self.what))
        })?;
        self.pos += 4;
        Ok(chunk.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        self.take4().map(u32::from_le_bytes)
    }

    fn f32(&mut self) -> Result<f32> {
        let at = self.pos;
        let v = f32::from_le_bytes(self.take4()?);
        if !v.is_finite() {
            return Err(Error::parse(Location::Byte(at), "non-finite value"));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::parse(
                Location::Byte(self.pos),
                format!("trailing bytes after {}", self.what),
            ));
        }
        Ok(())
    }
}
