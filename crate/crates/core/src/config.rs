//! JSON run configuration and its validation into library objects.
//!
//! Parse failures and invalid values are reported with the dotted path of
//! the offending field, e.g. `reference.c_value`.

use std::fmt;

use serde::Deserialize;

use crate::error::Error;
use crate::info::{AuditMode, NonnegFunction};
use crate::measure::{QuadratureGrid, ReferenceMeasure};
use crate::models::{gaussian_pdf, uniform_pdf, BaseSpace, CellLayout, PointProcessModel};
use crate::pgfl::TestFunction;
use crate::units::UnitExp;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub base_space: SpaceConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub kl: Option<KlConfig>,
    #[serde(default)]
    pub c_sweep: Option<CSweepConfig>,
    #[serde(default)]
    pub pgfl_check: PgflCheckConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dimension: usize,
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_unit_name")]
    pub unit_name: String,
}

fn default_unit_name() -> String {
    "iota".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Poisson { intensity: FieldSpec },
    IidCluster { cardinality: Vec<f64>, spatial: SpatialSpec },
    MultiBernoulli { components: Vec<ComponentConfig> },
    EmptyOnly,
}

/// A constant rate or one value per cell.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant(f64),
    Cells(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialSpec {
    Uniform,
    /// Per-cell pdf values; must integrate to one on the grid.
    Cells(Vec<f64>),
    Gaussian { mean: Vec<f64>, sd: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub existence: f64,
    pub spatial: SpatialSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub c_value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub cells: usize,
    /// Chosen from `tail_tolerance` when absent.
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

fn default_tail_tolerance() -> f64 {
    QuadratureGrid::DEFAULT_TAIL_TOLERANCE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: default_samples(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Checked,
    Nondimensionalized,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "default_alpha")]
    pub alpha: UnitExp,
    #[serde(default = "default_mode")]
    pub mode: ModeSpec,
    #[serde(default = "one")]
    pub k: f64,
    /// Constant test function for the generating functionals.
    #[serde(default = "one")]
    pub h: f64,
    /// Constant `f` for the Laplace and cumulant functionals.
    #[serde(default)]
    pub f: f64,
    #[serde(default = "one_u32")]
    pub moment: u32,
}

fn default_alpha() -> UnitExp {
    UnitExp::new(1, 2)
}

fn default_mode() -> ModeSpec {
    ModeSpec::Checked
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            alpha: default_alpha(),
            mode: default_mode(),
            k: 1.0,
            h: 1.0,
            f: 0.0,
            moment: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlConfig {
    pub reference_model: ModelConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CSweepConfig {
    pub c_values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgflCheckConfig {
    /// Boxes (one `[lo, hi]` per axis) for the projection checks; the
    /// first one and the first two are used.
    #[serde(default)]
    pub boxes: Option<Vec<Vec<[f64; 2]>>>,
    /// Points for the Janossy recovery; the first one and the first two
    /// are used.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(r) = &self.reference {
            ReferenceMeasure::new(r.c_value).map_err(|e| ConfigError::at("reference.c_value", e))?;
        }
        if !(self.audit.k.is_finite() && self.audit.k > 0.0) {
            return Err(ConfigError::at("audit.k", "unit factor must be positive"));
        }
        if let Some(s) = &self.c_sweep {
            for (i, &c) in s.c_values.iter().enumerate() {
                ReferenceMeasure::new(c).map_err(|e| ConfigError::at(format!("c_sweep.c_values[{i}]"), e))?;
            }
        }
        if self.mc.samples < 2 {
            return Err(ConfigError::at("mc.samples", "at least 2 samples are needed"));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<BaseSpace, ConfigError> {
        let s = &self.base_space;
        if s.bounds.len() != s.dimension {
            return Err(ConfigError::at(
                "base_space.bounds",
                format!("expected {} intervals, got {}", s.dimension, s.bounds.len()),
            ));
        }
        BaseSpace::new(s.bounds.iter().map(|b| (b[0], b[1])).collect(), s.unit_name.clone())
            .map_err(|e| ConfigError::at("base_space", e))
    }

    pub fn layout(&self) -> Result<CellLayout, ConfigError> {
        CellLayout::new(self.space()?, self.grid.cells).map_err(|e| ConfigError::at("grid.cells", e))
    }

    pub fn model(&self) -> Result<PointProcessModel, ConfigError> {
        build_model(&self.model, self.layout()?, "model")
    }

    /// The model `kl.reference_model` on the same grid.
    pub fn kl_reference_model(&self) -> Result<PointProcessModel, ConfigError> {
        let kl = self.kl.as_ref().ok_or_else(|| ConfigError::at("kl", "section required by this command"))?;
        build_model(&kl.reference_model, self.layout()?, "kl.reference_model")
    }

    pub fn reference(&self) -> Result<ReferenceMeasure, ConfigError> {
        let r = self
            .reference
            .as_ref()
            .ok_or_else(|| ConfigError::at("reference", "section required by this command"))?;
        ReferenceMeasure::new(r.c_value).map_err(|e| ConfigError::at("reference.c_value", e))
    }

    pub fn grid_for(&self, model: &PointProcessModel) -> Result<QuadratureGrid, ConfigError> {
        let g = &self.grid;
        let grid = QuadratureGrid::new(g.cells, g.n_max.unwrap_or(0), g.tail_tolerance)
            .map_err(|e| ConfigError::at("grid.tail_tolerance", e))?;
        Ok(match g.n_max {
            Some(_) => grid,
            None => QuadratureGrid {
                n_max: model.truncation_order(g.tail_tolerance),
                ..grid
            },
        })
    }

    pub fn audit_mode(&self) -> AuditMode {
        match self.audit.mode {
            ModeSpec::Checked => AuditMode::Checked,
            ModeSpec::Nondimensionalized => AuditMode::Nondimensionalized(self.audit.k),
        }
    }

    pub fn audit_h(&self, layout: &CellLayout) -> Result<TestFunction, ConfigError> {
        TestFunction::constant(layout, self.audit.h).map_err(|e| ConfigError::at("audit.h", e))
    }

    pub fn audit_f(&self, layout: &CellLayout) -> Result<NonnegFunction, ConfigError> {
        NonnegFunction::constant(layout, self.audit.f).map_err(|e| ConfigError::at("audit.f", e))
    }

    pub fn c_values(&self) -> Result<&[f64], ConfigError> {
        self.c_sweep
            .as_ref()
            .map(|s| s.c_values.as_slice())
            .ok_or_else(|| ConfigError::at("c_sweep", "section required by this command"))
    }
}

fn spatial_pdf(spec: &SpatialSpec, layout: &CellLayout, path: &str) -> Result<Vec<f64>, ConfigError> {
    match spec {
        SpatialSpec::Uniform => Ok(uniform_pdf(layout)),
        SpatialSpec::Cells(v) => Ok(v.clone()),
        SpatialSpec::Gaussian { mean, sd } => {
            gaussian_pdf(layout, mean, *sd).map_err(|e| ConfigError::at(format!("{path}.gaussian"), e))
        }
    }
}

fn build_model(spec: &ModelConfig, layout: CellLayout, path: &str) -> Result<PointProcessModel, ConfigError> {
    let wrap = |sub: &str| {
        let p = if sub.is_empty() {
            path.to_string()
        } else {
            format!("{path}.{sub}")
        };
        move |e: Error| ConfigError::at(p, e)
    };
    match spec {
        ModelConfig::Poisson { intensity } => {
            let values = match intensity {
                FieldSpec::Constant(r) => vec![*r; layout.len()],
                FieldSpec::Cells(v) => v.clone(),
            };
            PointProcessModel::poisson(layout, values).map_err(wrap("intensity"))
        }
        ModelConfig::IidCluster { cardinality, spatial } => {
            let pdf = spatial_pdf(spatial, &layout, &format!("{path}.spatial"))?;
            PointProcessModel::iid_cluster(layout, cardinality.clone(), pdf).map_err(wrap(""))
        }
        ModelConfig::MultiBernoulli { components } => {
            let comps = components
                .iter()
                .enumerate()
                .map(|(i, c)| Ok((c.existence, spatial_pdf(&c.spatial, &layout, &format!("{path}.components[{i}].spatial"))?)))
                .collect::<Result<Vec<_>, ConfigError>>()?;
            PointProcessModel::multi_bernoulli(layout, comps).map_err(wrap("components"))
        }
        ModelConfig::EmptyOnly => Ok(PointProcessModel::empty_only(layout)),
    }
}
