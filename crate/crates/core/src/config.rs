//! JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{BuiltinKernel, CollisionConfig};
use crate::cosmo::{solve_constraint_for_U, CosmoState, PhysParams, PSI_FLOOR};
use crate::phase_space::{sobolev_norm, GridFunction, MomentumGrid};
use crate::solver::SolveConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ConfigError {
    fn from_json(e: serde_json::Error) -> Self {
        ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Direct,
    Picard,
    VerifyCollision,
    VerifyEnergy,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSource {
    Zero,
    Gaussian(GaussianField),
    File(PathBuf),
}

/// Isotropic Gaussian given either by its peak value or by its
/// `H^m_d` norm at the solver's Sobolev parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianField {
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub sobolev_norm: Option<f64>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSettings {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "W0")]
    pub w0: f64,
    #[serde(rename = "Z0")]
    pub z0: f64,
    #[serde(rename = "Phi0")]
    pub phi0: f64,
    pub psi0: f64,
    pub f0: FieldSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub u_max: f64,
    pub n: usize,
}

fn default_sphere_order() -> usize {
    6
}

fn default_collision_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSettings {
    pub kernel: BuiltinKernel,
    #[serde(default = "default_sphere_order")]
    pub sphere_order: usize,
    #[serde(default = "default_collision_stride")]
    pub stride: usize,
}

impl Default for CollisionSettings {
    fn default() -> Self {
        Self {
            kernel: BuiltinKernel::zero(),
            sphere_order: default_sphere_order(),
            stride: default_collision_stride(),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "default_out_dir")]
    pub directory: PathBuf,
    /// Write every `stride`-th stored record to the CSV.
    #[serde(default = "default_collision_stride")]
    pub stride: usize,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            directory: default_out_dir(),
            stride: 1,
        }
    }
}

fn default_kappa() -> f64 {
    1.0
}

fn default_delta1() -> f64 {
    0.1
}

fn default_samples() -> usize {
    1000
}

fn default_jacobian_samples() -> usize {
    100
}

fn default_moser_pairs() -> usize {
    5
}

/// Parameters of the post-run and verification checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSettings {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_delta1")]
    pub delta1: f64,
    /// Radius of the decay check; defaults to `‖f₀‖_{H³_d}`.
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub kinematic_samples: usize,
    #[serde(default = "default_jacobian_samples")]
    pub jacobian_samples: usize,
    #[serde(default = "default_moser_pairs")]
    pub moser_pairs: usize,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            kappa: default_kappa(),
            delta1: default_delta1(),
            r: None,
            seed: 0,
            kinematic_samples: default_samples(),
            jacobian_samples: default_jacobian_samples(),
            moser_pairs: default_moser_pairs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub physics: PhysParams,
    pub initial: InitialSettings,
    pub grid: GridSettings,
    #[serde(default)]
    pub collision: CollisionSettings,
    pub solve: SolveConfig,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub checks: CheckSettings,
    /// Directory against which relative file paths are resolved.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// The parsed JSON document, kept for parameter sweeps.
    #[serde(skip)]
    pub source: serde_json::Value,
}

/// Fully constructed initial data, with `U₀` from the constraint.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub state: CosmoState,
    pub field: GridFunction,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(ConfigError::from_json)?;
        Self::from_value(value)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = serde_json::from_value(value.clone()).map_err(ConfigError::from_json)?;
        cfg.source = value;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.physics
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let ini = &self.initial;
        for (name, v) in [
            ("E0", ini.e0),
            ("W0", ini.w0),
            ("Z0", ini.z0),
            ("Phi0", ini.phi0),
            ("psi0", ini.psi0),
        ] {
            if !v.is_finite() {
                return invalid(format!("{name} must be finite"));
            }
        }
        if !(ini.e0 > 0.0) {
            return invalid(format!("E0 must be > 0, got {}", ini.e0));
        }
        if ini.w0 > 0.0 {
            return invalid(format!("W0 must be <= 0, got {}", ini.w0));
        }
        if ini.phi0 < 0.0 {
            return invalid(format!("Phi0 must be >= 0, got {}", ini.phi0));
        }
        if ini.psi0 < 0.0 {
            return invalid(format!("psi0 must be >= 0, got {}", ini.psi0));
        }
        if self.physics.rho > 0.0 && ini.psi0 <= PSI_FLOOR {
            return invalid("psi0 must be > 0 when rho > 0".into());
        }
        if let FieldSource::Gaussian(g) = &ini.f0 {
            match (g.amplitude, g.sobolev_norm) {
                (Some(a), None) if a.is_finite() && a >= 0.0 => {}
                (None, Some(r)) if r.is_finite() && r >= 0.0 => {}
                _ => return invalid("gaussian f0 needs exactly one of amplitude, sobolev_norm (nonnegative)".into()),
            }
            if !(g.width > 0.0) || !g.width.is_finite() {
                return invalid(format!("gaussian width must be > 0, got {}", g.width));
            }
        }
        let grid = self.momentum_grid()?;
        self.collision_config()
            .validate(&grid)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.solve.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.output.stride == 0 {
            return invalid("output stride must be at least 1".into());
        }
        if !(self.checks.kappa > 0.0) || !(self.checks.delta1 > 0.0) {
            return invalid("checks.kappa and checks.delta1 must be > 0".into());
        }
        if let Some(r) = self.checks.r {
            if !(r > 0.0) {
                return invalid(format!("checks.r must be > 0, got {r}"));
            }
        }
        Ok(())
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid, ConfigError> {
        MomentumGrid::new(self.grid.u_max, self.grid.n).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn collision_config(&self) -> CollisionConfig {
        CollisionConfig {
            sphere_order: self.collision.sphere_order,
            velocity_subsample: self.collision.stride,
        }
    }

    pub fn initial_field(&self) -> Result<GridFunction, ConfigError> {
        let grid = self.momentum_grid()?;
        match &self.initial.f0 {
            FieldSource::Zero => Ok(GridFunction::zeros(grid)),
            FieldSource::Gaussian(g) => {
                if let Some(a) = g.amplitude {
                    return Ok(GridFunction::gaussian(grid, a, g.width));
                }
                let target = g.sobolev_norm.unwrap_or(0.0);
                let unit = GridFunction::gaussian(grid, 1.0, g.width);
                let norm = sobolev_norm(&unit, &self.solve.sobolev).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(unit.scaled(target / norm))
            }
            FieldSource::File(path) => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    self.base_dir.join(path)
                };
                let f = GridFunction::load(&path)
                    .map_err(|e| ConfigError::Invalid(format!("f0 file {}: {e}", path.display())))?;
                if *f.grid() != grid {
                    return Err(ConfigError::Invalid(format!(
                        "f0 file {} is on grid {} but the configuration uses {}",
                        path.display(),
                        f.grid(),
                        grid
                    )));
                }
                if f.min() < 0.0 {
                    return Err(ConfigError::Invalid("f0 must be nonnegative".into()));
                }
                Ok(f)
            }
        }
    }

    /// Initial data with `U₀` solved from the Hamiltonian constraint.
    pub fn initial_data(&self) -> Result<InitialData, ConfigError> {
        let field = self.initial_field()?;
        let i = &self.initial;
        let u = solve_constraint_for_U(i.e0, i.w0, i.z0, i.phi0, i.psi0, &field, &self.physics)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(InitialData {
            state: CosmoState {
                e: i.e0,
                u,
                w: i.w0,
                z: i.z0,
                phi: i.phi0,
                psi: i.psi0,
            },
            field,
        })
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = RunConfig::from_json_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}
