//! Semantic video object segmentation by learning pairwise context from
//! weakly labeled superpixels.
//!
//! The pipeline runs superpixel segmentation per frame, turns object
//! detections into class tracks that label part of the superpixels, learns
//! class-pair link scores by label propagation over a superpixel similarity
//! graph, and labels every superpixel by minimizing a pairwise CRF energy
//! with alpha-expansion.

pub mod config;
pub mod context;
pub mod crf;
pub mod error;
pub mod eval;
pub mod inference;
pub mod io;
pub mod overlay;
pub mod pipeline;
pub mod propagation;
pub mod proposals;
pub mod simgraph;
pub mod superpixel;
pub mod synth;

pub use error::{Error, Result};
