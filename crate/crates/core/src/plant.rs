//! Rigid spacecraft with a reaction wheel array: ground-truth dynamics.

use nalgebra::{DVector, Matrix3, Matrix3xX, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attitude::{mrp_kinematics, mrp_to_dcm, shadow_if_needed, Mrp};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("non-finite input to the equations of motion ({0})")]
    NonFinite(&'static str),
    #[error("state diverged at t = {time} s (state norm {state_norm:e})")]
    Divergence { time: f64, state_norm: f64 },
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
}

/// How the wheel spin rate responds to a degraded wheel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WheelTorqueModel {
    /// The health factor scales the torque seen by both wheel and body:
    /// `Ω̇ = -Φ u / J_RW`. Conserves total angular momentum.
    #[default]
    Effective,
    /// The wheel spins up with the full command, `Ω̇ = -u / J_RW`.
    Commanded,
}

/// Wheel array geometry, inertias and actuator limits.
#[derive(Debug, Clone, PartialEq)]
pub struct RwaConfig<T: Real> {
    /// Spin axes, one column per wheel, in body coordinates.
    pub g: Matrix3xX<T>,
    /// Wheel spin-axis inertia, kg·m².
    pub j_rw: T,
    /// Per-wheel torque limit, N·m.
    pub max_torque: T,
    /// Per-wheel speed limit, rad/s.
    pub max_speed: T,
    /// Spacecraft inertia, kg·m².
    pub j_body: Matrix3<T>,
}

impl<T: Real> RwaConfig<T> {
    pub fn n_wheels(&self) -> usize {
        self.g.ncols()
    }

    pub fn j_body_inverse(&self) -> Matrix3<T> {
        // j_body is validated SPD by the scenario loader.
        self.j_body
            .try_inverse()
            .unwrap_or_else(|| Matrix3::from_element(T::lit(f64::NAN)))
    }

    /// Clamps each commanded torque to `±max_torque`. Returns the clamped
    /// vector and which components were limited.
    pub fn clamp_torque(&self, u: &DVector<T>) -> (DVector<T>, Vec<bool>) {
        let lim = self.max_torque;
        let mut hit = vec![false; u.len()];
        let clamped = DVector::from_iterator(
            u.len(),
            u.iter().enumerate().map(|(i, &x)| {
                if x > lim {
                    hit[i] = true;
                    lim
                } else if x < -lim {
                    hit[i] = true;
                    -lim
                } else {
                    x
                }
            }),
        );
        (clamped, hit)
    }
}

/// Per-wheel effectiveness factors in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HealthMatrix<T: Real> {
    pub phi: DVector<T>,
}

impl<T: Real> HealthMatrix<T> {
    pub fn new(phi: DVector<T>) -> Option<Self> {
        phi.iter()
            .all(|&p| p >= T::zero() && p <= T::one())
            .then_some(HealthMatrix { phi })
    }

    pub fn healthy(n: usize) -> Self {
        HealthMatrix {
            phi: DVector::from_element(n, T::one()),
        }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState<T: Real> {
    /// Body attitude relative to the inertial frame.
    pub sigma: Mrp<T>,
    /// Body angular velocity, body coordinates, rad/s.
    pub omega: Vector3<T>,
    /// Wheel spin rates Ω, rad/s.
    pub wheel_speeds: DVector<T>,
    pub time: T,
}

impl<T: Real> PlantState<T> {
    pub fn at_rest(n_wheels: usize) -> Self {
        PlantState {
            sigma: Mrp::zero(),
            omega: Vector3::zeros(),
            wheel_speeds: DVector::zeros(n_wheels),
            time: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.sigma.is_finite()
            && self.omega.iter().all(|x| x.is_finite_value())
            && self.wheel_speeds.iter().all(|x| x.is_finite_value())
            && self.time.is_finite_value()
    }

    fn norm(&self) -> f64 {
        (self.sigma.norm_squared() + self.omega.norm_squared() + self.wheel_speeds.norm_squared())
            .to_f64()
            .sqrt()
    }

    /// Total angular momentum `Jω + J_RW G Ω` in body coordinates.
    pub fn body_momentum(&self, cfg: &RwaConfig<T>) -> Vector3<T> {
        cfg.j_body * self.omega + &cfg.g * &self.wheel_speeds * cfg.j_rw
    }

    /// Total angular momentum resolved in the inertial frame.
    pub fn inertial_momentum(&self, cfg: &RwaConfig<T>) -> Vector3<T> {
        mrp_to_dcm(&self.sigma).transpose() * self.body_momentum(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative<T: Real> {
    pub sigma_dot: Vector3<T>,
    pub omega_dot: Vector3<T>,
    pub wheel_accel: DVector<T>,
}

/// Equations of motion. `u` is the commanded wheel torque; it is clamped to
/// the torque limit before being applied.
pub fn eom<T: Real>(
    state: &PlantState<T>,
    u: &DVector<T>,
    phi: &HealthMatrix<T>,
    cfg: &RwaConfig<T>,
    model: WheelTorqueModel,
) -> Result<StateDerivative<T>, PlantError> {
    check_dims(state, u, phi, cfg)?;
    if !u.iter().all(|x| x.is_finite_value()) {
        return Err(PlantError::NonFinite("torque"));
    }
    if !state.is_finite() {
        return Err(PlantError::NonFinite("state"));
    }
    let (u_sat, _) = cfg.clamp_torque(u);
    Ok(derivative(
        state,
        &u_sat,
        phi,
        cfg,
        &cfg.j_body_inverse(),
        model,
    ))
}

fn check_dims<T: Real>(
    state: &PlantState<T>,
    u: &DVector<T>,
    phi: &HealthMatrix<T>,
    cfg: &RwaConfig<T>,
) -> Result<(), PlantError> {
    let n = cfg.n_wheels();
    for (what, found) in [
        ("torque", u.len()),
        ("health", phi.len()),
        ("wheel_speeds", state.wheel_speeds.len()),
    ] {
        if found != n {
            return Err(PlantError::Dimension {
                what,
                expected: n,
                found,
            });
        }
    }
    Ok(())
}

fn derivative<T: Real>(
    state: &PlantState<T>,
    u_sat: &DVector<T>,
    phi: &HealthMatrix<T>,
    cfg: &RwaConfig<T>,
    j_inv: &Matrix3<T>,
    model: WheelTorqueModel,
) -> StateDerivative<T> {
    let effective = u_sat.component_mul(&phi.phi);
    let h = state.body_momentum(cfg);
    let omega_dot = j_inv * (-state.omega.cross(&h) + &cfg.g * &effective);
    let wheel_torque = match model {
        WheelTorqueModel::Effective => effective,
        WheelTorqueModel::Commanded => u_sat.clone(),
    };
    StateDerivative {
        sigma_dot: mrp_kinematics(&state.sigma, &state.omega),
        omega_dot,
        wheel_accel: wheel_torque / (-cfg.j_rw),
    }
}

/// Outcome of one integration step, including which limits were active.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T: Real> {
    pub state: PlantState<T>,
    pub torque_limited: Vec<bool>,
    pub speed_limited: Vec<bool>,
}

/// Advances the plant by `dt` with classical RK4, holding `u` constant.
pub fn step<T: Real>(
    state: &PlantState<T>,
    u: &DVector<T>,
    phi: &HealthMatrix<T>,
    cfg: &RwaConfig<T>,
    model: WheelTorqueModel,
    dt: T,
) -> Result<PlantState<T>, PlantError> {
    step_with_report(state, u, phi, cfg, model, dt).map(|r| r.state)
}

pub fn step_with_report<T: Real>(
    state: &PlantState<T>,
    u: &DVector<T>,
    phi: &HealthMatrix<T>,
    cfg: &RwaConfig<T>,
    model: WheelTorqueModel,
    dt: T,
) -> Result<StepReport<T>, PlantError> {
    if !(dt > T::zero()) {
        return Err(PlantError::BadStep(dt.to_f64()));
    }
    check_dims(state, u, phi, cfg)?;
    if !u.iter().all(|x| x.is_finite_value()) {
        return Err(PlantError::NonFinite("torque"));
    }
    let (u_sat, torque_limited) = cfg.clamp_torque(u);
    let j_inv = cfg.j_body_inverse();
    let f = |s: &PlantState<T>| derivative(s, &u_sat, phi, cfg, &j_inv, model);

    let half = dt * T::lit(0.5);
    let k1 = f(state);
    let k2 = f(&offset(state, &k1, half));
    let k3 = f(&offset(state, &k2, half));
    let k4 = f(&offset(state, &k3, dt));

    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let sigma = state.sigma.0
        + (k1.sigma_dot + k2.sigma_dot * two + k3.sigma_dot * two + k4.sigma_dot) * sixth;
    let omega = state.omega
        + (k1.omega_dot + k2.omega_dot * two + k3.omega_dot * two + k4.omega_dot) * sixth;
    let mut wheel_speeds = &state.wheel_speeds
        + (&k1.wheel_accel + &k2.wheel_accel * two + &k3.wheel_accel * two + &k4.wheel_accel)
            * sixth;

    let mut speed_limited = vec![false; wheel_speeds.len()];
    for (i, w) in wheel_speeds.iter_mut().enumerate() {
        if *w > cfg.max_speed {
            *w = cfg.max_speed;
            speed_limited[i] = true;
        } else if *w < -cfg.max_speed {
            *w = -cfg.max_speed;
            speed_limited[i] = true;
        }
    }

    let next = PlantState {
        sigma: shadow_if_needed(&Mrp(sigma)),
        omega,
        wheel_speeds,
        time: state.time + dt,
    };
    if !next.is_finite() {
        return Err(PlantError::Divergence {
            time: next.time.to_f64(),
            state_norm: next.norm(),
        });
    }
    Ok(StepReport {
        state: next,
        torque_limited,
        speed_limited,
    })
}

fn offset<T: Real>(s: &PlantState<T>, d: &StateDerivative<T>, h: T) -> PlantState<T> {
    PlantState {
        sigma: Mrp(s.sigma.0 + d.sigma_dot * h),
        omega: s.omega + d.omega_dot * h,
        wheel_speeds: &s.wheel_speeds + &d.wheel_accel * h,
        time: s.time + h,
    }
}
