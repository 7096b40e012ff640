//! JSON run configuration: geometry, materials, simulation parameters,
//! loads and outputs in one reviewable file.
//!
//! Parsing is strict (unknown keys are rejected) and every semantic
//! validation error carries the path of the offending key.

use crate::plate::{Scheme, SimMode};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config error at {path}: {reason}")]
    Schema { path: String, reason: String },
}

impl ConfigError {
    fn new(path: &str, reason: impl Into<String>) -> Self {
        ConfigError::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub loads: LoadsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
}

/// Unit-cell descriptors per phase plus the plate-scale layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// voxels per edge of every unit cell
    pub resolution: usize,
    pub phases: Vec<PhaseGeometry>,
    pub plate: PlateLayout,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGeometry {
    pub id: usize,
    pub primitive: PrimitiveConfig,
}

/// Unit-cell geometry descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveConfig {
    FullSolid,
    /// fluid layer normal to `axis` (1-based) of relative `thickness`
    Layer { axis: usize, thickness: f64 },
    CenteredInclusion { radius: f64 },
    /// explicit voxel mask from the binary exchange format
    MaskFile { path: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateLayout {
    pub regions: Vec<RegionConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// `[x0, y0, x1, y1]` sub-rectangle of the periodic mid-plane
    pub rect: [f64; 4],
    pub column: Vec<ColumnLayerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnLayerConfig {
    /// `[z0, z1] ⊂ [-1/2, 1/2]`
    pub interval: [f64; 2],
    pub phase: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub phases: Vec<PhaseMaterial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMaterial {
    pub id: usize,
    /// Lamé parameters of the solid skeleton
    pub lambda: f64,
    pub mu: f64,
    pub solid_density: f64,
    pub fluid_density: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub mode: SimMode,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// plate grid `[Nx, Ny, Nz]`
    pub grid: [usize; 3],
    /// snapshot cadence in steps
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_scheme() -> Scheme {
    Scheme::ImplicitMidpoint
}

fn default_stride() -> usize {
    1
}

/// Load data: either a named analytic preset or explicitly sampled vectors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadsConfig {
    /// `zero` (default), `ramp` (deterministic smooth ramp of plate loads),
    /// or `eigenmode` (cosine pressure column datum, no plate loads)
    #[serde(default)]
    pub preset: Option<String>,
    /// sample spacing for the explicit series
    #[serde(default)]
    pub dt_sample: Option<f64>,
    /// plate load samples, `n_a + n_b` values each
    #[serde(default)]
    pub f: Option<Vec<Vec<f64>>>,
    /// pressure source samples on the live pressure layout
    #[serde(default)]
    pub g: Option<Vec<Vec<f64>>>,
    /// initial pressure datum (dual of the live pressure layout)
    #[serde(default)]
    pub t0: Option<Vec<f64>>,
    /// initial deflection coefficients (inertial mode)
    #[serde(default)]
    pub b0: Option<Vec<f64>>,
    /// initial deflection velocity coefficients (inertial mode)
    #[serde(default)]
    pub b1: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_out_dir")]
    pub directory: String,
    #[serde(default = "default_ledger")]
    pub ledger: String,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_ledger() -> String {
    "ledger.csv".into()
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            directory: default_out_dir(),
            ledger: default_ledger(),
            snapshots: false,
        }
    }
}

/// Overrides of the default verification tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_duality")]
    pub duality: f64,
    #[serde(default = "default_symmetry")]
    pub symmetry: f64,
}

fn default_duality() -> f64 {
    1e-8
}

fn default_symmetry() -> f64 {
    1e-12
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            duality: default_duality(),
            symmetry: default_symmetry(),
        }
    }
}

/// Parses and validates a configuration from JSON text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        ConfigError::Schema {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        }
    })?;
    validate(&config)?;
    Ok(config)
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    if c.geometry.resolution < 2 {
        return Err(ConfigError::new("geometry.resolution", "must be >= 2"));
    }
    let mut geometry_ids = BTreeSet::new();
    for (i, p) in c.geometry.phases.iter().enumerate() {
        if !geometry_ids.insert(p.id) {
            return Err(ConfigError::new(
                &format!("geometry.phases[{i}].id"),
                format!("duplicate phase id {}", p.id),
            ));
        }
        match &p.primitive {
            PrimitiveConfig::Layer { axis, thickness } => {
                if !(1..=3).contains(axis) {
                    return Err(ConfigError::new(
                        &format!("geometry.phases[{i}].primitive.axis"),
                        "must be 1, 2 or 3",
                    ));
                }
                if !(*thickness > 0.0 && *thickness < 1.0) {
                    return Err(ConfigError::new(
                        &format!("geometry.phases[{i}].primitive.thickness"),
                        "must lie in (0, 1)",
                    ));
                }
            }
            PrimitiveConfig::CenteredInclusion { radius } => {
                if !(*radius > 0.0 && *radius < 0.5) {
                    return Err(ConfigError::new(
                        &format!("geometry.phases[{i}].primitive.radius"),
                        "must lie in (0, 0.5)",
                    ));
                }
            }
            PrimitiveConfig::FullSolid | PrimitiveConfig::MaskFile { .. } => {}
        }
    }
    let mut material_ids = BTreeSet::new();
    for (i, m) in c.material.phases.iter().enumerate() {
        if !material_ids.insert(m.id) {
            return Err(ConfigError::new(
                &format!("material.phases[{i}].id"),
                format!("duplicate phase id {}", m.id),
            ));
        }
        if m.mu <= 0.0 {
            return Err(ConfigError::new(
                &format!("material.phases[{i}].mu"),
                "must be positive",
            ));
        }
        if m.solid_density <= 0.0 || m.fluid_density < 0.0 {
            return Err(ConfigError::new(
                &format!("material.phases[{i}]"),
                "solid density must be positive, fluid density non-negative",
            ));
        }
    }
    if c.geometry.plate.regions.is_empty() {
        return Err(ConfigError::new("geometry.plate.regions", "must not be empty"));
    }
    for (i, r) in c.geometry.plate.regions.iter().enumerate() {
        for (j, l) in r.column.iter().enumerate() {
            let path = format!("geometry.plate.regions[{i}].column[{j}].phase");
            if !geometry_ids.contains(&l.phase) {
                return Err(ConfigError::new(
                    &path,
                    format!("phase {} has no geometry entry", l.phase),
                ));
            }
            if !material_ids.contains(&l.phase) {
                return Err(ConfigError::new(
                    &path,
                    format!("phase {} has no material entry", l.phase),
                ));
            }
        }
    }
    if !(c.simulation.dt.is_finite() && c.simulation.dt > 0.0) {
        return Err(ConfigError::new("simulation.dt", "must be positive"));
    }
    if c.simulation.t_end < c.simulation.dt {
        return Err(ConfigError::new("simulation.t_end", "must be >= dt"));
    }
    let [nx, ny, nz] = c.simulation.grid;
    if nx < 2 || ny < 2 || nz < 1 {
        return Err(ConfigError::new(
            "simulation.grid",
            "need Nx, Ny >= 2 and Nz >= 1",
        ));
    }
    if c.simulation.stride == 0 {
        return Err(ConfigError::new("simulation.stride", "must be >= 1"));
    }
    if let Some(preset) = &c.loads.preset {
        if !["zero", "ramp", "eigenmode"].contains(&preset.as_str()) {
            return Err(ConfigError::new(
                "loads.preset",
                format!("unknown preset '{preset}' (expected zero, ramp or eigenmode)"),
            ));
        }
        if c.loads.f.is_some() || c.loads.g.is_some() || c.loads.t0.is_some() {
            return Err(ConfigError::new(
                "loads",
                "a preset excludes explicit f/g/t0 series",
            ));
        }
    }
    if (c.loads.f.is_some() || c.loads.g.is_some()) && c.loads.dt_sample.is_none() {
        return Err(ConfigError::new(
            "loads.dt_sample",
            "required with explicit load series",
        ));
    }
    if let Some(dt_sample) = c.loads.dt_sample {
        if !(dt_sample.is_finite() && dt_sample > 0.0) {
            return Err(ConfigError::new("loads.dt_sample", "must be positive"));
        }
    }
    if !(c.tolerances.duality > 0.0 && c.tolerances.symmetry > 0.0) {
        return Err(ConfigError::new("tolerances", "must be positive"));
    }
    Ok(())
}
