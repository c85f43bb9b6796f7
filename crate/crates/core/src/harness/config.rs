//! Scenario configuration: TOML document model, loading and validation.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{shadow_if_needed, Mrp};
use crate::controller::{ControllerGains, GainError};
use crate::guidance::{GuidanceMode, GuidanceSchedule, OrbitConfig, EARTH_RADIUS};
use crate::linalg::{is_positive_definite, rank};
use crate::plant::{HealthMatrix, RwaConfig, WheelTorqueModel};

/// Tolerance on `‖gᵢ‖ = 1`. Published array geometries are rounded to four
/// significant digits, so the check only guards against gross errors.
pub const AXIS_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{field}: dimension mismatch, expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("{field}: must be symmetric positive definite")]
    NotPositiveDefinite { field: String },
    #[error("{field}: must be symmetric positive semidefinite")]
    NotPositiveSemidefinite { field: String },
    #[error("wheels.axes: rank {rank} < 3, the array cannot produce torque about every axis")]
    RankDeficient { rank: usize },
    #[error("{field}: {reason}")]
    InvalidValue { field: String, reason: String },
}

impl ConfigError {
    /// Stable machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "io",
            ConfigError::Parse(_) => "parse",
            ConfigError::UnknownPreset(_) => "unknown_preset",
            ConfigError::Dimension { .. } => "dimension_mismatch",
            ConfigError::NotPositiveDefinite { .. } => "not_positive_definite",
            ConfigError::NotPositiveSemidefinite { .. } => "not_positive_semidefinite",
            ConfigError::RankDeficient { .. } => "rank_deficient",
            ConfigError::InvalidValue { .. } => "invalid_value",
        }
    }

    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Initial plant and estimator state.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    pub sigma: Mrp<f64>,
    pub omega: Vector3<f64>,
    pub wheel_speeds: DVector<f64>,
    pub theta_hat: DVector<f64>,
}

/// A fully validated simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub rwa: RwaConfig<f64>,
    /// Spacecraft mass, kg. Recorded for reference only; the dynamics use the
    /// inertia matrix.
    pub mass: Option<f64>,
    pub phi_true: HealthMatrix<f64>,
    pub gains: ControllerGains<f64>,
    pub orbit: OrbitConfig<f64>,
    pub schedule: GuidanceSchedule<f64>,
    pub dt: f64,
    pub duration: f64,
    /// Plant steps per control update.
    pub control_decimation: usize,
    pub wheel_torque_model: WheelTorqueModel,
    pub initial: InitialConditions,
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn n_wheels(&self) -> usize {
        self.rwa.n_wheels()
    }

    pub fn control_period(&self) -> f64 {
        self.dt * self.control_decimation as f64
    }

    /// Runs every check the loader applies.
    pub fn validate(&self) -> Result<(), ConfigError> {
        validate(self, true)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes")
    }
}

/// A matrix given as a scalar multiple of identity, a diagonal, or rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn square(&self, field: &str, n: usize) -> Result<DMatrix<f64>, ConfigError> {
        match self {
            MatrixSpec::Scalar(s) => Ok(DMatrix::identity(n, n) * *s),
            MatrixSpec::Diagonal(d) => {
                if d.len() != n {
                    return Err(ConfigError::Dimension {
                        field: field.into(),
                        expected: n,
                        found: d.len(),
                    });
                }
                Ok(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    let found = rows
                        .iter()
                        .map(Vec::len)
                        .find(|&l| l != n)
                        .unwrap_or(rows.len());
                    return Err(ConfigError::Dimension {
                        field: field.into(),
                        expected: n,
                        found,
                    });
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        }
    }

    fn square3(&self, field: &str) -> Result<Matrix3<f64>, ConfigError> {
        let m = self.square(field, 3)?;
        Ok(Matrix3::from_iterator(m.iter().copied()))
    }

    /// Compact form: scalar when a multiple of identity, diagonal when
    /// diagonal, rows otherwise.
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let diag_only = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0));
        if diag_only && n > 0 && (0..n).all(|i| m[(i, i)] == m[(0, 0)]) {
            MatrixSpec::Scalar(m[(0, 0)])
        } else if diag_only {
            MatrixSpec::Diagonal(m.diagonal().iter().copied().collect())
        } else {
            MatrixSpec::Rows((0..n).map(|i| m.row(i).iter().copied().collect()).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub dt: f64,
    pub duration: f64,
    #[serde(default = "one")]
    pub control_decimation: usize,
    #[serde(default)]
    pub wheel_torque_model: WheelTorqueModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub spacecraft: SpacecraftSection,
    pub wheels: WheelsSection,
    pub gains: GainsSection,
    #[serde(default)]
    pub orbit: OrbitSection,
    pub schedule: Vec<ScheduleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
}

fn default_name() -> String {
    "scenario".into()
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    pub inertia: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelsSection {
    /// Three rows; column `i` is the spin axis of wheel `i`.
    pub axes: Vec<Vec<f64>>,
    pub inertia: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    /// True health factor of each wheel.
    pub health: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k: MatrixSpec,
    pub alpha: MatrixSpec,
    pub beta: f64,
    pub gamma: MatrixSpec,
    pub k1: MatrixSpec,
    pub lambda_bar: f64,
    pub stack_size: usize,
    pub window: f64,
    #[serde(default = "unit_interval")]
    pub theta_bounds: [f64; 2],
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSection {
    pub radius: f64,
    pub mu: f64,
    #[serde(default)]
    pub raan: f64,
    #[serde(default)]
    pub inclination: f64,
    #[serde(default)]
    pub arg_latitude_epoch: f64,
}

impl Default for OrbitSection {
    fn default() -> Self {
        let o = OrbitConfig::<f64>::leo_500km();
        OrbitSection {
            radius: o.radius,
            mu: o.mu,
            raan: o.raan,
            inclination: o.inclination,
            arg_latitude_epoch: o.arg_latitude_epoch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub time: f64,
    pub mode: GuidanceMode,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheel_speeds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat: Option<Vec<f64>>,
}

/// Loads a scenario from a file path or, when no such file exists, from a
/// built-in preset name.
pub fn load_config(path_or_preset: &str) -> Result<ScenarioConfig, ConfigError> {
    let path = Path::new(path_or_preset);
    if path.exists() {
        load_config_file(path)
    } else {
        super::presets::preset(path_or_preset)
            .ok_or_else(|| ConfigError::UnknownPreset(path_or_preset.to_string()))
    }
}

pub fn load_config_file(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let cfg = file.build()?;
    validate(&cfg, true)?;
    Ok(cfg)
}

impl ScenarioFile {
    /// Converts to the typed model, checking shapes. Value checks happen in
    /// [`ScenarioConfig::validate`].
    pub fn build(&self) -> Result<ScenarioConfig, ConfigError> {
        let axes = &self.wheels.axes;
        if axes.len() != 3 {
            return Err(ConfigError::Dimension {
                field: "wheels.axes (rows)".into(),
                expected: 3,
                found: axes.len(),
            });
        }
        let n = axes[0].len();
        if let Some(bad) = axes.iter().find(|r| r.len() != n) {
            return Err(ConfigError::Dimension {
                field: "wheels.axes (columns)".into(),
                expected: n,
                found: bad.len(),
            });
        }
        if n == 0 {
            return Err(ConfigError::invalid(
                "wheels.axes",
                "at least one wheel is required",
            ));
        }
        let g = Matrix3xX::from_fn(n, |r, c| axes[r][c]);
        let rwa = RwaConfig {
            g,
            j_rw: self.wheels.inertia,
            max_torque: self.wheels.max_torque,
            max_speed: self.wheels.max_speed,
            j_body: self.spacecraft.inertia.square3("spacecraft.inertia")?,
        };
        check_len("wheels.health", n, self.wheels.health.len())?;
        let phi = DVector::from_column_slice(&self.wheels.health);

        let g = &self.gains;
        let gains = ControllerGains {
            k: g.k.square3("gains.k")?,
            alpha: g.alpha.square3("gains.alpha")?,
            beta: g.beta,
            gamma: g.gamma.square("gains.gamma", n)?,
            k1: g.k1.square("gains.k1", n)?,
            lambda_bar: g.lambda_bar,
            n_s: g.stack_size,
            delta_t: g.window,
            theta_bounds: (g.theta_bounds[0], g.theta_bounds[1]),
        };

        let init = self.initial.clone().unwrap_or_default();
        let wheel_speeds = match init.wheel_speeds {
            Some(w) => {
                check_len("initial.wheel_speeds", n, w.len())?;
                DVector::from_vec(w)
            }
            None => DVector::zeros(n),
        };
        let theta_hat = match init.theta_hat {
            Some(t) => {
                check_len("initial.theta_hat", n, t.len())?;
                DVector::from_vec(t)
            }
            None => DVector::from_element(n, 1.0),
        };
        let sigma = init
            .sigma
            .map(|s| Mrp::new(s[0], s[1], s[2]))
            .unwrap_or(Mrp::zero());

        Ok(ScenarioConfig {
            name: self.name.clone(),
            rwa,
            mass: self.spacecraft.mass,
            phi_true: HealthMatrix { phi },
            gains,
            orbit: OrbitConfig {
                radius: self.orbit.radius,
                mu: self.orbit.mu,
                raan: self.orbit.raan,
                inclination: self.orbit.inclination,
                arg_latitude_epoch: self.orbit.arg_latitude_epoch,
            },
            schedule: GuidanceSchedule {
                segments: self.schedule.iter().map(|e| (e.time, e.mode)).collect(),
            },
            dt: self.dt,
            duration: self.duration,
            control_decimation: self.control_decimation,
            wheel_torque_model: self.wheel_torque_model,
            initial: InitialConditions {
                sigma: shadow_if_needed(&sigma),
                omega: init.omega.map(Vector3::from).unwrap_or_else(Vector3::zeros),
                wheel_speeds,
                theta_hat,
            },
            output: self.output.clone(),
        })
    }
}

impl From<&ScenarioConfig> for ScenarioFile {
    fn from(c: &ScenarioConfig) -> Self {
        let n = c.n_wheels();
        let j = DMatrix::from_iterator(3, 3, c.rwa.j_body.iter().copied());
        let initial = InitialSection {
            sigma: (c.initial.sigma != Mrp::zero()).then(|| c.initial.sigma.0.into()),
            omega: (c.initial.omega != Vector3::zeros()).then(|| c.initial.omega.into()),
            wheel_speeds: (c.initial.wheel_speeds != DVector::zeros(n))
                .then(|| c.initial.wheel_speeds.iter().copied().collect()),
            theta_hat: (c.initial.theta_hat != DVector::from_element(n, 1.0))
                .then(|| c.initial.theta_hat.iter().copied().collect()),
        };
        let has_initial = initial != InitialSection::default();
        ScenarioFile {
            name: c.name.clone(),
            dt: c.dt,
            duration: c.duration,
            control_decimation: c.control_decimation,
            wheel_torque_model: c.wheel_torque_model,
            output: c.output.clone(),
            spacecraft: SpacecraftSection {
                mass: c.mass,
                inertia: MatrixSpec::from_matrix(&j),
            },
            wheels: WheelsSection {
                axes: (0..3)
                    .map(|r| c.rwa.g.row(r).iter().copied().collect())
                    .collect(),
                inertia: c.rwa.j_rw,
                max_torque: c.rwa.max_torque,
                max_speed: c.rwa.max_speed,
                health: c.phi_true.phi.iter().copied().collect(),
            },
            gains: GainsSection {
                k: MatrixSpec::from_matrix(&DMatrix::from_iterator(
                    3,
                    3,
                    c.gains.k.iter().copied(),
                )),
                alpha: MatrixSpec::from_matrix(&DMatrix::from_iterator(
                    3,
                    3,
                    c.gains.alpha.iter().copied(),
                )),
                beta: c.gains.beta,
                gamma: MatrixSpec::from_matrix(&c.gains.gamma),
                k1: MatrixSpec::from_matrix(&c.gains.k1),
                lambda_bar: c.gains.lambda_bar,
                stack_size: c.gains.n_s,
                window: c.gains.delta_t,
                theta_bounds: [c.gains.theta_bounds.0, c.gains.theta_bounds.1],
            },
            orbit: OrbitSection {
                radius: c.orbit.radius,
                mu: c.orbit.mu,
                raan: c.orbit.raan,
                inclination: c.orbit.inclination,
                arg_latitude_epoch: c.orbit.arg_latitude_epoch,
            },
            schedule: c
                .schedule
                .segments
                .iter()
                .map(|&(time, mode)| ScheduleEntry { time, mode })
                .collect(),
            initial: has_initial.then_some(initial),
        }
    }
}

fn check_len(field: &str, expected: usize, found: usize) -> Result<(), ConfigError> {
    if expected == found {
        Ok(())
    } else {
        Err(ConfigError::Dimension {
            field: field.into(),
            expected,
            found,
        })
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// `require_full_schedule` enforces `duration >= last switch time`; runtime
/// overrides of the duration skip it.
pub(crate) fn validate(c: &ScenarioConfig, require_full_schedule: bool) -> Result<(), ConfigError> {
    let n = c.n_wheels();

    // array geometry
    for (i, col) in c.rwa.g.column_iter().enumerate() {
        let norm = col.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOLERANCE {
            return Err(ConfigError::invalid(
                "wheels.axes",
                format!("axis of wheel {} has norm {norm}, expected 1", i + 1),
            ));
        }
    }
    let g = DMatrix::from_iterator(3, n, c.rwa.g.iter().copied());
    let r = rank(&g, 1e-10);
    if r < 3 {
        return Err(ConfigError::RankDeficient { rank: r });
    }
    positive("wheels.inertia", c.rwa.j_rw)?;
    positive("wheels.max_torque", c.rwa.max_torque)?;
    positive("wheels.max_speed", c.rwa.max_speed)?;
    let j = DMatrix::from_iterator(3, 3, c.rwa.j_body.iter().copied());
    if !is_positive_definite(&j) {
        return Err(ConfigError::NotPositiveDefinite {
            field: "spacecraft.inertia".into(),
        });
    }
    if let Some(m) = c.mass {
        positive("spacecraft.mass", m)?;
    }

    check_len("wheels.health", n, c.phi_true.len())?;
    if let Some(p) = c.phi_true.phi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ConfigError::invalid(
            "wheels.health",
            format!("{p} is outside [0, 1]"),
        ));
    }

    c.gains.validate(n).map_err(|e| match e {
        GainError::NotPositiveDefinite(f) => ConfigError::NotPositiveDefinite {
            field: format!("gains.{f}"),
        },
        GainError::NotPositiveSemidefinite(f) => ConfigError::NotPositiveSemidefinite {
            field: format!("gains.{f}"),
        },
        GainError::Dimension {
            field,
            expected,
            found,
        } => ConfigError::Dimension {
            field: format!("gains.{field}"),
            expected,
            found,
        },
        GainError::InvalidValue { field, reason } => ConfigError::InvalidValue {
            field: format!(
                "gains.{}",
                if field == "n_s" {
                    "stack_size"
                } else if field == "delta_t" {
                    "window"
                } else {
                    field
                }
            ),
            reason,
        },
    })?;

    // timing
    positive("dt", c.dt)?;
    if !(c.duration.is_finite() && c.duration >= 0.0) {
        return Err(ConfigError::invalid(
            "duration",
            format!("must be non-negative, got {}", c.duration),
        ));
    }
    if c.control_decimation == 0 {
        return Err(ConfigError::invalid(
            "control_decimation",
            "must be at least 1",
        ));
    }
    let period = c.control_period();
    let ratio = c.gains.delta_t / period;
    if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(ConfigError::invalid(
            "gains.window",
            format!("must be a whole multiple of the control period {period} s"),
        ));
    }

    // guidance
    let segs = &c.schedule.segments;
    if segs.is_empty() || segs[0].0 != 0.0 {
        return Err(ConfigError::invalid(
            "schedule",
            "must start with an entry at time 0",
        ));
    }
    if segs.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(ConfigError::invalid(
            "schedule",
            "switch times must be strictly increasing",
        ));
    }
    if require_full_schedule && c.duration < c.schedule.last_switch() {
        return Err(ConfigError::invalid(
            "duration",
            format!(
                "{} s ends before the last schedule switch at {} s",
                c.duration,
                c.schedule.last_switch()
            ),
        ));
    }
    if !(c.orbit.radius.is_finite() && c.orbit.radius > EARTH_RADIUS) {
        return Err(ConfigError::invalid(
            "orbit.radius",
            "must exceed the Earth radius",
        ));
    }
    positive("orbit.mu", c.orbit.mu)?;

    // initial state
    check_len("initial.wheel_speeds", n, c.initial.wheel_speeds.len())?;
    check_len("initial.theta_hat", n, c.initial.theta_hat.len())?;
    let finite = c.initial.sigma.is_finite()
        && c.initial.omega.iter().all(|x| x.is_finite())
        && c.initial.wheel_speeds.iter().all(|x| x.is_finite());
    if !finite {
        return Err(ConfigError::invalid("initial", "state must be finite"));
    }
    if c.initial
        .wheel_speeds
        .iter()
        .any(|w| w.abs() > c.rwa.max_speed)
    {
        return Err(ConfigError::invalid(
            "initial.wheel_speeds",
            "exceeds wheels.max_speed",
        ));
    }
    Ok(())
}
