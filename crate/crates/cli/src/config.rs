//! TOML run configuration.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use mrt_core::dynamics::{Physics, SimConfig, Tolerances};
use mrt_core::linstab::{CriticalField, LinearParams, LinearProblem};
use mrt_core::profiles::DensityProfile;
use mrt_core::spectral::SlabGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub physics: PhysicsCfg,
    pub grid: GridCfg,
    pub profile: ProfileCfg,
    #[serde(default)]
    pub time: TimeCfg,
    #[serde(default)]
    pub output: OutputCfg,
    #[serde(default)]
    pub seed: SeedCfg,
    #[serde(default)]
    pub linstab: LinstabCfg,
    #[serde(default)]
    pub stability: StabilityCfg,
    pub escape: Option<EscapeCfg>,
    pub dispersion: Option<DispersionCfg>,
    pub sweep: Option<SweepCfg>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsCfg {
    #[serde(default = "default_mu")]
    pub mu: f64,
    pub g: f64,
    pub lambda: f64,
    /// Absolute field strength.
    pub m: Option<f64>,
    /// Field strength as a multiple of the critical value.
    pub m_over_mc: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    #[serde(rename = "L")]
    pub l: f64,
    pub h: f64,
    #[serde(rename = "N1", default = "default_n1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileCfg {
    /// `affine`, `tanh` or `table`.
    pub kind: String,
    pub rho_bottom: Option<f64>,
    pub rho_top: Option<f64>,
    pub center: Option<f64>,
    pub width: Option<f64>,
    pub file: Option<PathBuf>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeCfg {
    pub dt: f64,
    pub t_end: f64,
    pub dt_min: f64,
}

impl Default for TimeCfg {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            dt_min: default_dt_min(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputCfg {
    /// Time between energy reports.
    pub cadence: f64,
    pub snapshot: bool,
}

impl Default for OutputCfg {
    fn default() -> Self {
        Self {
            cadence: 0.1,
            snapshot: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedCfg {
    pub delta: f64,
    pub phase: f64,
    pub shear: f64,
    /// Horizontal mode index; the fastest one when absent.
    pub n: Option<usize>,
    pub n_max: usize,
}

impl Default for SeedCfg {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            phase: 0.0,
            shear: 0.0,
            n: None,
            n_max: 16,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LinstabCfg {
    /// Sine modes in the eigenproblem; the grid's N2 when absent.
    pub modes: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityCfg {
    pub c_stab: f64,
}

impl Default for StabilityCfg {
    fn default() -> Self {
        Self { c_stab: 10.0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeCfg {
    pub epsilon: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionCfg {
    #[serde(default)]
    pub m: Vec<f64>,
    #[serde(default)]
    pub m_over_mc: Vec<f64>,
    pub n_max: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    /// `delta`, `m`, `m_over_mc`, `dt` or `N2`.
    pub parameter: String,
    pub values: Vec<f64>,
}

fn default_mu() -> f64 {
    0.1
}
fn default_n1() -> usize {
    64
}
fn default_samples() -> usize {
    1025
}
fn default_dt_min() -> f64 {
    1e-6
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Config = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(file) = &cfg.profile.file {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.profile.file = Some(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    fn require(v: Option<f64>, key: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Usage(format!("missing key profile.{key}")))
    }

    pub fn build_profile(&self) -> Result<DensityProfile, CliError> {
        let p = &self.profile;
        let h = self.grid.h;
        let profile = match p.kind.as_str() {
            "affine" => DensityProfile::affine(
                Self::require(p.rho_bottom, "rho_bottom")?,
                Self::require(p.rho_top, "rho_top")?,
                h,
                p.samples,
            ),
            "tanh" => DensityProfile::tanh_layer(
                Self::require(p.rho_bottom, "rho_bottom")?,
                Self::require(p.rho_top, "rho_top")?,
                Self::require(p.center, "center")?,
                Self::require(p.width, "width")?,
                h,
                p.samples,
            ),
            "table" => {
                let file = p
                    .file
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("missing key profile.file".into()))?;
                let f = File::open(file).map_err(|e| {
                    CliError::Usage(format!("profile.file {}: {e}", file.display()))
                })?;
                let table = DensityProfile::read_table(BufReader::new(f))
                    .map_err(|e| CliError::Usage(format!("profile.file: {e}")))?;
                if (table.h() - h).abs() > 1e-12 * h {
                    return Err(CliError::Usage(format!(
                        "profile.file height {} differs from grid.h {h}",
                        table.h()
                    )));
                }
                Ok(table)
            }
            other => {
                return Err(CliError::Usage(format!(
                    "profile.kind must be affine, tanh or table, got {other}"
                )))
            }
        };
        profile.map_err(|e| CliError::Usage(format!("profile: {e}")))
    }

    pub fn grid(&self) -> Result<SlabGrid, CliError> {
        SlabGrid::new(self.grid.l, self.grid.h, self.grid.n1, self.grid.n2)
            .map_err(|e| CliError::Usage(format!("grid: {e}")))
    }

    pub fn linear_params(&self) -> LinearParams {
        LinearParams {
            g: self.physics.g,
            lambda: self.physics.lambda,
            mu: self.physics.mu,
        }
    }

    pub fn problem(&self, profile: &DensityProfile) -> Result<LinearProblem, CliError> {
        let modes = self.linstab.modes.unwrap_or(self.grid.n2);
        LinearProblem::new(profile, self.linear_params(), modes).map_err(CliError::from_core)
    }

    /// Absolute field strength, computing `m_C` when given relatively.
    pub fn field_strength(&self, critical: &CriticalField) -> Result<f64, CliError> {
        match (self.physics.m, self.physics.m_over_mc) {
            (Some(m), None) => Ok(m),
            (None, Some(f)) => Ok(f * critical.mc),
            (None, None) => Ok(0.0),
            (Some(_), Some(_)) => Err(CliError::Usage(
                "physics.m and physics.m_over_mc are mutually exclusive".into(),
            )),
        }
    }

    pub fn sim_config(&self, profile: DensityProfile, m: f64) -> Result<SimConfig, CliError> {
        let cfg = SimConfig {
            physics: Physics {
                mu: self.physics.mu,
                g: self.physics.g,
                lambda: self.physics.lambda,
                m,
            },
            grid: self.grid()?,
            profile,
            dt: self.time.dt,
            dt_min: self.time.dt_min.min(self.time.dt),
            t_end: self.time.t_end,
            report_interval: self.output.cadence,
            tolerances: Tolerances::default(),
        };
        cfg.validate()
            .map_err(|e| CliError::Usage(format!("config: {e}")))?;
        Ok(cfg)
    }

    /// Copy of the config with one sweep parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Config, CliError> {
        let mut c = self.clone();
        match name {
            "delta" => c.seed.delta = value,
            "m" => {
                c.physics.m = Some(value);
                c.physics.m_over_mc = None;
            }
            "m_over_mc" => {
                c.physics.m = None;
                c.physics.m_over_mc = Some(value);
            }
            "dt" => c.time.dt = value,
            "N2" => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::Usage(format!(
                        "sweep value {value} is not a valid N2"
                    )));
                }
                c.grid.n2 = value as usize;
            }
            other => {
                return Err(CliError::Usage(format!(
                    "sweep.parameter must be delta, m, m_over_mc, dt or N2, got {other}"
                )))
            }
        }
        Ok(c)
    }
}
