//! Run configuration: strict JSON schema (unknown keys rejected), dotted-path
//! command-line overrides, and validated construction of the core objects.

use birkhoff_core::flow::IntegratorConfig;
use birkhoff_core::surface::SurfaceSpec;
use birkhoff_core::Surface64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub integrator: IntegratorBlock,
    #[serde(default)]
    pub audit: AuditBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowBlock>,
    #[serde(default)]
    pub compare: CompareBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_angle_per_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_count() -> usize {
    20
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { count: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowBlock {
    pub start_x: Vec<f64>,
    pub start_y: Vec<f64>,
    pub t_final: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

fn default_output_every() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    /// Per-coordinate tolerance enforced on the numeric-vs-closed-form sweep;
    /// exceeding it exits with the verification-failure code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// t-grid of the closed-form G table.
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
}

fn default_t_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

impl Default for CompareBlock {
    fn default() -> Self {
        Self {
            tolerance: None,
            t_grid: default_t_grid(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: String,
}

fn default_directory() -> String {
    "out".to_string()
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_directory(),
        }
    }
}

impl RunConfig {
    /// Loads the config file, applies `--set key.path=value` overrides, and
    /// deserializes strictly.
    pub fn load(path: &str, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config `{path}`: {e}")))?;
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!(
                "malformed JSON in `{path}` at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        let config: RunConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.integrator_config()?.validate().map_err(CliError::Config)?;
        if self.sweep.count == 0 {
            return Err(CliError::Config("sweep.count must be positive".into()));
        }
        for (name, v) in [
            ("audit.samples", self.audit.samples.map(|s| s as f64)),
            ("audit.strip_halfwidth", self.audit.strip_halfwidth),
            ("audit.epsilon_samples", self.audit.epsilon_samples.map(|s| s as f64)),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(CliError::Config(format!("{name} must be positive")));
                }
            }
        }
        if let Some(flow) = &self.flow {
            if flow.start_x.len() != flow.start_y.len() || flow.start_x.is_empty() {
                return Err(CliError::Config(
                    "flow.start_x and flow.start_y must be non-empty and equal length".into(),
                ));
            }
            if flow.output_every == 0 {
                return Err(CliError::Config("flow.output_every must be positive".into()));
            }
            if !flow.t_final.is_finite() {
                return Err(CliError::Config("flow.t_final must be finite".into()));
            }
        }
        if let Some(tol) = self.compare.tolerance {
            if !(tol > 0.0) {
                return Err(CliError::Config("compare.tolerance must be positive".into()));
            }
        }
        if self.compare.t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(CliError::Config("compare.t_grid entries must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn build_surface(&self) -> Result<Surface64, CliError> {
        self.surface
            .build::<f64>()
            .map_err(|e| CliError::Config(format!("surface: {e}")))
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig<f64>, CliError> {
        let d = IntegratorConfig::<f64>::default();
        let cfg = IntegratorConfig {
            base_step: self.integrator.base_step.unwrap_or(d.base_step),
            max_angle_per_step: self
                .integrator
                .max_angle_per_step
                .unwrap_or(d.max_angle_per_step),
            constraint_tolerance: self
                .integrator
                .constraint_tolerance
                .unwrap_or(d.constraint_tolerance),
            max_steps: self.integrator.max_steps.unwrap_or(d.max_steps),
        };
        cfg.validate().map_err(CliError::Config)?;
        Ok(cfg)
    }

    pub fn audit_options(&self) -> birkhoff_core::section::AuditOptions<f64> {
        let d = birkhoff_core::section::AuditOptions::<f64>::default();
        birkhoff_core::section::AuditOptions {
            samples: self.audit.samples.unwrap_or(d.samples),
            strip_halfwidth: self.audit.strip_halfwidth,
            epsilon_samples: self.audit.epsilon_samples.unwrap_or(d.epsilon_samples),
        }
    }

    /// The fully resolved config as a JSON value, embedded into every output
    /// file.
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Applies one `path.to.key=value` override onto the JSON tree; the value is
/// parsed as a JSON literal when possible and as a string otherwise.
fn apply_override(root: &mut serde_json::Value, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` must be key.path=value")))?;
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("override path `{path}` has empty segments")));
    }
    for (i, seg) in segments.iter().enumerate() {
        if !node.is_object() {
            return Err(CliError::Config(format!(
                "override path `{path}` crosses a non-object at `{seg}`"
            )));
        }
        let map = node.as_object_mut().expect("checked object");
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), parsed);
            return Ok(());
        }
        node = map
            .entry(seg.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("override loop returns on the last segment")
}
