//! Run configuration: a TOML document with one table per component.
//!
//! Every key is optional and falls back to the default convection setup
//! (`configs/default.toml`). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use alloyfreeze_core::{
    BoundaryData, CurveKind, Error as CoreError, Grid, MomentumTimeCoeff, PhaseDiagram,
    PhysicalParams, Problem, Profile, ReproConfig, StepConfig, TimeModulation, WallTemperature,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Contents of `configs/default.toml`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("config serialization failed: {0}")]
    Serialize(#[from] toml::ser::Error),

    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn in_section(section: &str) -> impl Fn(CoreError) -> ConfigError + '_ {
    move |e| match e {
        CoreError::InvalidParameter { field, reason } => {
            invalid(format!("{section}.{field}"), reason)
        }
        other => invalid(section, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed of randomized initial states.
    pub seed: u64,
    pub grid: GridSection,
    pub phase: PhaseSection,
    pub physical: PhysicalSection,
    pub boundary: BoundarySection,
    pub step: StepSection,
    pub repro: ReproSection,
    pub initial: InitialSection,
    pub simulate: SimulateSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curve {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub theta_f: f64,
    pub theta_e: f64,
    pub c_e: f64,
    pub c_a: f64,
    pub curve: Curve,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            theta_f: 1.0,
            theta_e: 0.0,
            c_e: 0.5,
            c_a: 0.2,
            curve: Curve::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalSection {
    pub rho: f64,
    pub nu: f64,
    pub eta: f64,
    pub kappa: f64,
    pub heat_capacity: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gravity: f64,
    pub theta_ref: f64,
    pub c_ref: f64,
    pub carman_kozeny: f64,
    pub c_total: f64,
}

impl Default for PhysicalSection {
    fn default() -> Self {
        let p = PhysicalParams::<f64>::default();
        Self {
            rho: p.rho,
            nu: p.nu,
            eta: p.eta,
            kappa: p.kappa,
            heat_capacity: p.heat_capacity,
            alpha: p.alpha,
            beta: p.beta,
            gravity: p.gravity,
            theta_ref: p.theta_ref,
            c_ref: p.c_ref,
            carman_kozeny: p.carman_kozeny,
            c_total: p.c_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    LinearInX {
        left: f64,
        right: f64,
    },
    /// Piecewise linear through `(x[k], values[k])`, constant beyond the ends.
    Tabulated {
        x: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModulationSpec {
    #[default]
    Steady,
    /// Adds `amplitude sin(2 pi t / period + phase)` to the profile.
    Sinusoidal {
        amplitude: f64,
        period: f64,
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSection {
    pub profile: ProfileSpec,
    #[serde(default)]
    pub modulation: ModulationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default = "default_bottom")]
    pub bottom: WallSection,
    #[serde(default = "default_top")]
    pub top: WallSection,
}

fn default_bottom() -> WallSection {
    WallSection {
        profile: ProfileSpec::Constant { value: 0.0 },
        modulation: ModulationSpec::Steady,
    }
}

fn default_top() -> WallSection {
    WallSection {
        profile: ProfileSpec::LinearInX {
            left: 0.8,
            right: 0.9,
        },
        modulation: ModulationSpec::Sinusoidal {
            amplitude: 0.05,
            period: 1.0,
            phase: 0.0,
        },
    }
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            bottom: default_bottom(),
            top: default_top(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeCoeff {
    #[default]
    Unit,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSection {
    pub dt: f64,
    pub eps: f64,
    pub cfl_max: f64,
    pub elliptic_tol: f64,
    pub elliptic_max_iter: usize,
    pub momentum_time_coeff: TimeCoeff,
}

impl Default for StepSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            eps: 0.1,
            cfl_max: 0.25,
            elliptic_tol: 1e-11,
            elliptic_max_iter: 5000,
            momentum_time_coeff: TimeCoeff::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReproSection {
    pub period: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub relaxation: f64,
    pub homotopy: Vec<f64>,
    pub eps_schedule: Vec<f64>,
}

impl Default for ReproSection {
    fn default() -> Self {
        Self {
            period: 1.0,
            fp_tol: 1e-8,
            fp_max_iter: 200,
            relaxation: 1.0,
            homotopy: vec![1.0],
            eps_schedule: vec![0.1, 0.03, 0.01, 0.003],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Uniform concentration, temperature lift, fluid at rest.
    #[default]
    Rest,
    /// Smooth seeded perturbation of the rest state.
    Random,
    /// Fields read from a snapshot prefix.
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: InitialKind,
    /// Scalar perturbation relative to the admissible range, in `[0, 1]`.
    pub amplitude: f64,
    /// Peak velocity of the random state.
    pub velocity: f64,
    /// Snapshot prefix, e.g. `run/snapshots/final`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: InitialKind::Rest,
            amplitude: 0.5,
            velocity: 0.01,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub horizon: f64,
    /// Snapshot interval in steps; 0 writes only the initial and final states.
    pub snapshot_every: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    #[default]
    Ascii,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: SnapshotFormat,
    /// Directory of a recorded run for `check`; when absent `check` simulates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: SnapshotFormat::Ascii,
            trajectory: None,
        }
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Re-checks every component invariant and the cross-section relations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let problem = self.problem()?;
        self.step_config()?;
        let rcfg = self.repro_config()?;
        if !problem.bc.is_periodic_over(rcfg.period) {
            return Err(invalid(
                "repro.period",
                "boundary data must satisfy theta(x, 0) = theta(x, period); use a multiple of the modulation period",
            ));
        }
        if !(self.simulate.horizon > 0.0 && self.simulate.horizon.is_finite()) {
            return Err(invalid("simulate.horizon", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.initial.amplitude) {
            return Err(invalid("initial.amplitude", "must lie in [0, 1]"));
        }
        if !(self.initial.velocity >= 0.0 && self.initial.velocity.is_finite()) {
            return Err(invalid(
                "initial.velocity",
                "must be nonnegative and finite",
            ));
        }
        if self.initial.kind == InitialKind::Snapshot && self.initial.path.is_none() {
            return Err(invalid("initial.path", "required when kind = \"snapshot\""));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem<f64>, ConfigError> {
        let g = &self.grid;
        let grid = Grid::new(g.nx, g.ny, g.lx, g.ly).map_err(in_section("grid"))?;
        let ph = &self.phase;
        let curve = match ph.curve {
            Curve::Linear => CurveKind::Linear,
        };
        let phase = PhaseDiagram::new(ph.theta_f, ph.theta_e, ph.c_e, ph.c_a, curve)
            .map_err(in_section("phase"))?;
        let p = &self.physical;
        let params = PhysicalParams {
            rho: p.rho,
            nu: p.nu,
            eta: p.eta,
            kappa: p.kappa,
            heat_capacity: p.heat_capacity,
            alpha: p.alpha,
            beta: p.beta,
            gravity: p.gravity,
            theta_ref: p.theta_ref,
            c_ref: p.c_ref,
            carman_kozeny: p.carman_kozeny,
            c_total: p.c_total,
        };
        params
            .validate(&phase, grid.area())
            .map_err(in_section("physical"))?;
        let bc = BoundaryData {
            bottom: wall(&self.boundary.bottom),
            top: wall(&self.boundary.top),
        };
        bc.validate().map_err(in_section("boundary"))?;
        Problem::new(grid, phase, params, bc).map_err(in_section("problem"))
    }

    pub fn step_config(&self) -> Result<StepConfig<f64>, ConfigError> {
        let s = &self.step;
        let cfg = StepConfig {
            dt: s.dt,
            eps: s.eps,
            cfl_max: s.cfl_max,
            elliptic_tol: s.elliptic_tol,
            elliptic_max_iter: s.elliptic_max_iter,
            momentum_time_coeff: match s.momentum_time_coeff {
                TimeCoeff::Unit => MomentumTimeCoeff::Unit,
                TimeCoeff::Density => MomentumTimeCoeff::Density,
            },
        };
        cfg.validate().map_err(in_section("step"))?;
        Ok(cfg)
    }

    pub fn repro_config(&self) -> Result<ReproConfig<f64>, ConfigError> {
        let r = &self.repro;
        let cfg = ReproConfig {
            period: r.period,
            fp_tol: r.fp_tol,
            fp_max_iter: r.fp_max_iter,
            relaxation: r.relaxation,
            homotopy: r.homotopy.clone(),
            eps_schedule: r.eps_schedule.clone(),
        };
        cfg.validate().map_err(in_section("repro"))?;
        Ok(cfg)
    }
}

fn wall(w: &WallSection) -> WallTemperature<f64> {
    let profile = match &w.profile {
        ProfileSpec::Constant { value } => Profile::Constant(*value),
        ProfileSpec::LinearInX { left, right } => Profile::LinearInX {
            left: *left,
            right: *right,
        },
        ProfileSpec::Tabulated { x, values } => Profile::Tabulated {
            x: x.clone(),
            values: values.clone(),
        },
    };
    let modulation = match w.modulation {
        ModulationSpec::Steady => TimeModulation::Steady,
        ModulationSpec::Sinusoidal {
            amplitude,
            period,
            phase,
        } => TimeModulation::Sinusoidal {
            amplitude,
            period,
            phase,
        },
    };
    WallTemperature {
        profile,
        modulation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_file_matches_default_struct() {
        assert_eq!(parse_config(DEFAULT_CONFIG).unwrap(), RunConfig::default());
    }

    #[test]
    fn empty_document_takes_defaults() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.boundary.bottom.profile = ProfileSpec::Tabulated {
            x: vec![0.0, 0.5, 1.0],
            values: vec![0.1, 0.2, 0.1],
        };
        cfg.initial.path = Some(PathBuf::from("a/b"));
        cfg.step.momentum_time_coeff = TimeCoeff::Density;
        let text = cfg.to_toml().unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
