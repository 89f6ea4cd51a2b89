//! Sparse graph dump: "CTXG", u32 n, u32 nnz, then nnz `(u32 i, u32 j, f32 w)`
//! triples covering both directions of every edge.

use std::path::Path;

use super::ByteReader;
use crate::error::{Error, Location, Result};
use crate::simgraph::SimilarityGraph;

pub const GRAPH_MAGIC: &[u8; 4] = b"CTXG";

pub fn graph_to_bytes(g: &SimilarityGraph) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 12 * g.nnz());
    out.extend_from_slice(GRAPH_MAGIC);
    out.extend_from_slice(&(g.node_count() as u32).to_le_bytes());
    out.extend_from_slice(&(g.nnz() as u32).to_le_bytes());
    for (i, j, w) in g.entries() {
        out.extend_from_slice(&i.to_le_bytes());
        out.extend_from_slice(&j.to_le_bytes());
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn graph_from_bytes(bytes: &[u8]) -> Result<SimilarityGraph> {
    let mut r = ByteReader::new(bytes, GRAPH_MAGIC, "graph")?;
    let n = r.u32()? as usize;
    super::check_node_count(n, 4)?;
    let nnz = r.u32()? as usize;
    if bytes.len() != 12 + nnz.saturating_mul(12) {
        let at = if bytes.len() < 12 + nnz.saturating_mul(12) { bytes.len() } else { 12 + nnz * 12 };
        return Err(Error::parse(
            Location::Byte(at),
            format!("graph declares {nnz} entries but holds {} bytes", bytes.len()),
        ));
    }
    if n > nnz {
        return Err(Error::parse(
            Location::Byte(4),
            format!("graph declares {n} nodes but only {nnz} entries; some node has no neighbor"),
        ));
    }
    let mut entries = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        entries.push((r.u32()?, r.u32()?, r.f32()?));
    }
    r.finish()?;
    SimilarityGraph::from_entries(n, &entries)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<SimilarityGraph> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    graph_from_bytes(&bytes)
}

pub fn write_graph(g: &SimilarityGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, graph_to_bytes(g)).map_err(|e| Error::io(path, e))
}
