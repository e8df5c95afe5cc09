//! Experiment configuration: a single JSON document plus dotted overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use wdrcm::{KernelSpec, KernelVariant, ModelParams, PointProcessSpec, SamplerKind};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sample,
    Sweep,
    DeltaEff,
    Classify,
    Diagnose,
    FiniteGraph,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::DeltaEff => "delta-eff",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Diagnose => "diagnose",
            ExperimentKind::FiniteGraph => "finite-graph",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for NGrid {
    fn default() -> Self {
        Self { lo: 10.0, hi: 1e8, count: 15 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyPoint {
    pub kernel: KernelVariant,
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub k_max: u32,
    /// Stage range for the decay-rate fit.
    pub decay_range: Option<(u32, u32)>,
    pub block_scale: u64,
    pub theta: f64,
    pub block_range: (i64, i64),
    /// Replicas for the block sweep; defaults to the experiment's replicas.
    pub block_replicas: Option<usize>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            k_max: 10,
            decay_range: None,
            block_scale: 64,
            theta: 0.75,
            block_range: (-2, 2),
            block_replicas: None,
        }
    }
}

fn default_point_process() -> PointProcessSpec {
    PointProcessSpec::Poisson { intensity: 1.0 }
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Layered
}

fn default_replicas() -> usize {
    1
}

fn default_tail_fraction() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelParams,
    #[serde(default = "default_point_process")]
    pub point_process: PointProcessSpec,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Window half-width `L` for sample and sweep.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Vertex counts for finite-graph.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub n_grid: NGrid,
    #[serde(default)]
    pub points: Vec<ClassifyPoint>,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub output: Option<String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.model.validate().map_err(|e| config_err(e.to_string()))?;
        self.point_process.validate().map_err(|e| config_err(e.to_string()))?;
        if self.replicas == 0 {
            return Err(config_err("replicas must be at least 1"));
        }
        let need_window = || -> CliResult<f64> {
            match self.half_width {
                Some(l) if l > 0.0 && l.is_finite() => Ok(l),
                Some(l) => Err(config_err(format!("half_width must be positive, got {l}"))),
                None => Err(config_err(format!("{} needs half_width", self.experiment.name()))),
            }
        };
        match self.experiment {
            ExperimentKind::Sample => {
                need_window()?;
            }
            ExperimentKind::Sweep => {
                need_window()?;
                if self.betas.is_empty() {
                    return Err(config_err("sweep needs a nonempty betas grid"));
                }
                if self.betas.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
                    return Err(config_err("every beta must be positive"));
                }
            }
            ExperimentKind::FiniteGraph => {
                if self.sizes.is_empty() || self.sizes.contains(&0) {
                    return Err(config_err("finite-graph needs a nonempty sizes grid of positive integers"));
                }
            }
            ExperimentKind::DeltaEff => {
                let g = self.n_grid;
                if !(g.lo >= 1.0 && g.hi > g.lo && g.count >= 2) {
                    return Err(config_err("n_grid needs 1 <= lo < hi and count >= 2"));
                }
            }
            ExperimentKind::Classify => {
                for p in &self.points {
                    KernelSpec::new(p.kernel, p.gamma).map_err(|e| config_err(e.to_string()))?;
                }
            }
            ExperimentKind::Diagnose => {
                let d = &self.diagnose;
                if d.k_max == 0 || d.k_max > wdrcm::multiscale::MAX_STAGE {
                    return Err(config_err(format!(
                        "diagnose.k_max must lie in 1..={}",
                        wdrcm::multiscale::MAX_STAGE
                    )));
                }
                if let Some((lo, hi)) = d.decay_range {
                    if !(1 <= lo && lo < hi && hi <= d.k_max) {
                        return Err(config_err("diagnose.decay_range must satisfy 1 <= lo < hi <= k_max"));
                    }
                }
                if !(d.theta > 0.0 && d.theta < 1.0) {
                    return Err(config_err("diagnose.theta must lie in (0, 1)"));
                }
                if d.block_scale == 0 || d.block_range.0 > d.block_range.1 {
                    return Err(config_err("diagnose needs block_scale >= 1 and a nonempty block_range"));
                }
                if d.block_replicas == Some(0) {
                    return Err(config_err("diagnose.block_replicas must be at least 1"));
                }
            }
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 0.2) {
            return Err(config_err("tail_fraction must lie in (0, 0.2]"));
        }
        Ok(())
    }
}

/// Parses an override value: JSON when it parses, a bare string otherwise.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `path` (dot separated) inside `doc`, creating objects on the way.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("malformed override path '{path}'")));
    }
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(config_err(format!(
                    "override '{path}': '{}' is not an object",
                    parts[..i].join(".")
                )));
            }
        }
        let map = cur.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!()
}

/// Reads a config document; a run manifest is accepted in place of a config
/// and its echoed configuration is used.
pub fn read_document(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{} is not valid JSON: {e}", path.display())))?;
    match doc.get("config") {
        Some(inner) if doc.get("outputs").is_some() => Ok(inner.clone()),
        _ => Ok(doc),
    }
}

/// Builds the final configuration from an optional document, the subcommand
/// and `(path, value)` overrides applied in order.
pub fn build(doc: Option<Value>, kind: ExperimentKind, overrides: &[(String, Value)]) -> CliResult<(ExperimentConfig, Value)> {
    let mut doc = doc.unwrap_or_else(|| Value::Object(Default::default()));
    if !doc.is_object() {
        return Err(config_err("configuration must be a JSON object"));
    }
    let wanted = Value::String(kind.name().to_string());
    match doc.get("experiment") {
        Some(v) if *v != wanted => {
            return Err(config_err(format!(
                "configuration is for experiment {v}, but the subcommand is {}",
                kind.name()
            )))
        }
        _ => set_path(&mut doc, "experiment", wanted)?,
    }
    for (path, value) in overrides {
        set_path(&mut doc, path, value.clone())?;
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(doc.clone()).map_err(|e| config_err(format!("invalid configuration: {e}")))?;
    cfg.validate()?;
    // Echo the fully defaulted form so a manifest pins every field.
    let echo = serde_json::to_value(&cfg).map_err(|e| config_err(e.to_string()))?;
    Ok((cfg, echo))
}
