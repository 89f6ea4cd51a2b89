//! Pipeline configuration, loadable from and savable to a TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::context::PairingPolicy;
use crate::crf::TrainConfig;
use crate::error::{Error, Location, Result};
use crate::inference::DEFAULT_MAX_SWEEPS;
use crate::propagation::PropagationConfig;
use crate::proposals::MotionModel;
use crate::superpixel::SegmentationParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ProposalConfig {
    pub min_confidence: f64,
    pub iou_threshold: f64,
    pub cover_threshold: f64,
    pub motion: MotionModel,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self { min_confidence: 0.5, iou_threshold: 0.5, cover_threshold: 0.5, motion: MotionModel::Constant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { k: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    #[default]
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct CrfConfig {
    pub topology: Topology,
    pub score_floor: f64,
    pub max_sweeps: usize,
}

impl Default for CrfConfig {
    fn default() -> Self {
        Self { topology: Topology::Sparse, score_floor: 1e-4, max_sweeps: DEFAULT_MAX_SWEEPS }
    }
}

/// Every tunable of the pipeline. The top-level `seed` drives all randomized
/// steps and overrides the per-section seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub superpixel: SegmentationParams,
    pub proposals: ProposalConfig,
    pub graph: GraphConfig,
    pub context: PairingPolicy,
    pub propagation: PropagationConfig,
    pub unary: TrainConfig,
    pub crf: CrfConfig,
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::validation(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(Location::Line(line), e.message().to_string())
        })?;
        cfg.validate()?;
        let seed = cfg.seed;
        Ok(cfg.with_seed(seed))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("configuration is always representable in TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    /// Set the global seed and propagate it to every randomized section.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.context.seed = seed;
        self.unary.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.superpixel.validate()?;
        unit_interval("proposals.minConfidence", self.proposals.min_confidence)?;
        unit_interval("proposals.iouThreshold", self.proposals.iou_threshold)?;
        unit_interval("proposals.coverThreshold", self.proposals.cover_threshold)?;
        if self.graph.k == 0 {
            return Err(Error::validation("graph.k must be >= 1"));
        }
        if self.context.cap == Some(0) {
            return Err(Error::validation("context.cap must be >= 1"));
        }
        self.propagation.validate()?;
        self.unary.validate()?;
        if !(self.crf.score_floor >= 0.0) {
            return Err(Error::validation("crf.scoreFloor must be >= 0"));
        }
        if self.crf.max_sweeps == 0 {
            return Err(Error::validation("crf.maxSweeps must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml_str("seed = 7\n[propagation]\nmu = 0.9\n").unwrap();
        assert_eq!(cfg.propagation.mu, 0.9);
        assert_eq!(cfg.propagation.tol, PropagationConfig::default().tol);
        assert_eq!((cfg.context.seed, cfg.unary.seed), (7, 7));
    }

    #[test]
    fn errors_name_the_line() {
        let err = PipelineConfig::from_toml_str("seed = 1\n\n[graph]\nkk = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { at: Location::Line(4), .. }), "{err:?}");
        let err = PipelineConfig::from_toml_str("[propagation]\nmu = 1.5\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
