//! Context score dump: "CTXS", u32 n, u32 num_labels, u32 num_pairs, a
//! directory of `(u32 m, u32 n, u32 nnz)` per pair, then for each pair in
//! directory order its `(u32 i, u32 j, f32 s)` triples.

use std::path::Path;

use super::ByteReader;
use crate::error::{Error, Result};
use crate::propagation::{ContextScores, ScoreMatrix};

pub const SCORES_MAGIC: &[u8; 4] = b"CTXS";

pub fn scores_to_bytes(s: &ContextScores) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(SCORES_MAGIC);
    out.extend_from_slice(&(s.size() as u32).to_le_bytes());
    out.extend_from_slice(&(s.num_labels() as u32).to_le_bytes());
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    for ((m, n), block) in s.iter() {
        for v in [m as u32, n as u32, block.nnz() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for (_, block) in s.iter() {
        for (i, j, v) in block.iter() {
            out.extend_from_slice(&(i as u32).to_le_bytes());
            out.extend_from_slice(&(j as u32).to_le_bytes());
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn scores_from_bytes(bytes: &[u8]) -> Result<ContextScores> {
    let mut r = ByteReader::new(bytes, SCORES_MAGIC, "scores")?;
    let n = r.u32()? as usize;
    super::check_node_count(n, 4)?;
    let num_labels = r.u32()? as usize;
    let num_pairs = r.u32()? as usize;
    let mut dir = Vec::new();
    for _ in 0..num_pairs {
        dir.push((r.u32()? as usize, r.u32()? as usize, r.u32()? as usize));
    }
    let mut out = ContextScores::new(n, num_labels);
    for (m, l, nnz) in dir {
        let mut triples = Vec::with_capacity(nnz.min(1 << 20));
        for _ in 0..nnz {
            triples.push((r.u32()? as usize, r.u32()? as usize, r.f32()? as f64));
        }
        if out.pair(m, l).is_some() {
            return Err(Error::validation(format!("duplicate score block ({m}, {l})")));
        }
        out.insert((m, l), ScoreMatrix::from_triples(n, triples)?)?;
    }
    r.finish()?;
    Ok(out)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ContextScores> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    scores_from_bytes(&bytes)
}

pub fn write_scores(s: &ContextScores, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scores_to_bytes(s)).map_err(|e| Error::io(path, e))
}
