//! Pipeline configuration. Precedence: command-line flags, then the TOML
//! file given with `--config`, then the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Surface samples per Chamfer evaluation.
    pub samples: usize,
    pub fusion: FusionConfig,
    pub shape: ShapeConfig,
    pub predictor: PredictorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub iou_threshold: f64,
    /// Depth agreement for visibility, in scene units.
    pub dist_threshold: f64,
    pub group_overlap: f64,
    pub n_seeds: usize,
    /// Fused segments with fewer points are discarded.
    pub min_part_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeConfig {
    pub resolution: usize,
    pub padding: f64,
    /// `identity` or `file:DIR` (precomputed `part_NN.aog` grids).
    pub completer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    /// `oracle`, `file:PATH` or `http:URL`.
    pub spec: String,
    pub timeout_s: f64,
    pub retries: u32,
    pub backoff_base_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            jobs: None,
            samples: 10_000,
            fusion: FusionConfig::default(),
            shape: ShapeConfig::default(),
            predictor: PredictorConfig::default(),
        }
    }
}

impl Default for FusionConfig {
    fn default() -> Self {
        let p = artkit::fusion::FusionParams::default();
        FusionConfig {
            iou_threshold: p.iou_threshold,
            dist_threshold: p.depth_tolerance,
            group_overlap: p.group_overlap,
            n_seeds: 4000,
            min_part_points: 50,
        }
    }
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            resolution: artkit::shape::DEFAULT_RESOLUTION,
            padding: artkit::shape::DEFAULT_PADDING,
            completer: "identity".into(),
        }
    }
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            spec: "oracle".into(),
            timeout_s: 30.0,
            retries: 2,
            backoff_base_s: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Input(format!("[ConfigError] {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::from_toml(&text)
            }
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Input(format!("[ConfigError] {msg}")));
        let f = &self.fusion;
        if !(0.0..=1.0).contains(&f.iou_threshold) {
            return bad(format!("fusion.iou_threshold {} outside [0, 1]", f.iou_threshold));
        }
        if !(0.0..=1.0).contains(&f.group_overlap) {
            return bad(format!("fusion.group_overlap {} outside [0, 1]", f.group_overlap));
        }
        if !(f.dist_threshold > 0.0) {
            return bad(format!("fusion.dist_threshold {} must be positive", f.dist_threshold));
        }
        if f.n_seeds == 0 {
            return bad("fusion.n_seeds must be positive".into());
        }
        if self.shape.resolution < artkit::shape::MIN_RESOLUTION || self.shape.resolution > 512 {
            return bad(format!(
                "shape.resolution {} outside [{}, 512]",
                self.shape.resolution,
                artkit::shape::MIN_RESOLUTION
            ));
        }
        if !(self.shape.padding >= 1.0 && self.shape.padding <= 4.0) {
            return bad(format!("shape.padding {} outside [1, 4]", self.shape.padding));
        }
        if self.shape.completer != "identity" && !self.shape.completer.starts_with("file:") {
            return bad(format!("shape.completer `{}` is not identity or file:DIR", self.shape.completer));
        }
        if !(self.predictor.timeout_s > 0.0) {
            return bad("predictor.timeout_s must be positive".into());
        }
        if !(self.predictor.backoff_base_s >= 0.0) {
            return bad("predictor.backoff_base_s must be non-negative".into());
        }
        self.predictor.spec.parse::<crate::predictor::PredictorSpec>()?;
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        Ok(())
    }

    pub fn fusion_params(&self) -> artkit::fusion::FusionParams {
        artkit::fusion::FusionParams {
            iou_threshold: self.fusion.iou_threshold,
            group_overlap: self.fusion.group_overlap,
            depth_tolerance: self.fusion.dist_threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml("seed = 7\n[shape]\nresolution = 32\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.shape.resolution, 32);
        assert_eq!(cfg.shape.padding, artkit::shape::DEFAULT_PADDING);
        assert_eq!(cfg.predictor, PredictorConfig::default());
    }

    #[test]
    fn rejects_out_of_range_and_unknown_keys() {
        assert!(PipelineConfig::from_toml("[fusion]\niou_threshold = 1.5\n").is_err());
        assert!(PipelineConfig::from_toml("[predictor]\ntimeout_s = 0\n").is_err());
        assert!(PipelineConfig::from_toml("[predictor]\nspec = \"gpt\"\n").is_err());
        assert!(PipelineConfig::from_toml("colour = 3\n").is_err());
    }
}
