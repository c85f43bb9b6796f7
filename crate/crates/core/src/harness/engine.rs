//! Fixed-step closed-loop simulation: guidance, controller, plant, telemetry.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};
use thiserror::Error;

use super::config::{validate, ConfigError, ScenarioConfig};
use super::metrics::{RunMetrics, SaturationCounts};
use super::telemetry::TelemetryRecord;
use crate::attitude::Mrp;
use crate::controller::{AdaptiveController, ControllerGains};
use crate::guidance::{reference, GuidanceSchedule, OrbitConfig};
use crate::plant::{
    step_with_report, HealthMatrix, PlantError, PlantState, RwaConfig, WheelTorqueModel,
};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The plant produced a non-finite state; `partial` holds everything
    /// recorded up to the last valid step.
    #[error("simulation aborted: {source}")]
    Diverged {
        source: PlantError,
        partial: Box<RunOutput<f64>>,
    },
}

/// Telemetry plus summary of one run.
#[derive(Debug, Clone)]
pub struct RunOutput<T: Real> {
    pub telemetry: Vec<TelemetryRecord<T>>,
    pub metrics: RunMetrics,
}

/// Wall-clock free, seed free: the same config always yields the same
/// telemetry.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput<f64>, SimError> {
    run_as::<f64>(config)
}

/// Runs the scenario in scalar type `T`.
pub fn run_as<T: Real>(config: &ScenarioConfig) -> Result<RunOutput<T>, SimError> {
    validate(config, false)?;
    let mut sim = Simulation::<T>::new(config);
    match sim.run_to_end() {
        Ok(()) => Ok(sim.finish()),
        Err(source) => {
            let out = sim.finish();
            Err(SimError::Diverged {
                source,
                partial: Box::new(RunOutput {
                    telemetry: out.telemetry.iter().map(to_f64_record).collect(),
                    metrics: out.metrics,
                }),
            })
        }
    }
}

fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

fn cast_v3<T: Real>(v: &Vector3<f64>) -> Vector3<T> {
    v.map(c)
}

fn cast_m3<T: Real>(m: &Matrix3<f64>) -> Matrix3<T> {
    m.map(c)
}

fn cast_dv<T: Real>(v: &DVector<f64>) -> DVector<T> {
    v.map(c)
}

fn to_f64_record<T: Real>(r: &TelemetryRecord<T>) -> TelemetryRecord<f64> {
    let f = |x: T| x.to_f64();
    TelemetryRecord {
        t: f(r.t),
        sigma_e: r.sigma_e.map(f),
        r: r.r.map(f),
        omega: r.omega.map(f),
        wheel_speeds: r.wheel_speeds.map(f),
        u_commanded: r.u_commanded.map(f),
        u_effective: r.u_effective.map(f),
        theta_hat: r.theta_hat.map(f),
        lambda_min: f(r.lambda_min),
        fe_flag: r.fe_flag,
        lyapunov_v: f(r.lyapunov_v),
    }
}

pub fn cast_rwa<T: Real>(r: &RwaConfig<f64>) -> RwaConfig<T> {
    RwaConfig {
        g: Matrix3xX::from_iterator(r.g.ncols(), r.g.iter().map(|&x| c(x))),
        j_rw: c(r.j_rw),
        max_torque: c(r.max_torque),
        max_speed: c(r.max_speed),
        j_body: cast_m3(&r.j_body),
    }
}

pub fn cast_gains<T: Real>(g: &ControllerGains<f64>) -> ControllerGains<T> {
    ControllerGains {
        k: cast_m3(&g.k),
        alpha: cast_m3(&g.alpha),
        beta: c(g.beta),
        gamma: g.gamma.map(c),
        k1: g.k1.map(c),
        lambda_bar: c(g.lambda_bar),
        n_s: g.n_s,
        delta_t: c(g.delta_t),
        theta_bounds: (c(g.theta_bounds.0), c(g.theta_bounds.1)),
    }
}

/// Stepwise simulation state. [`run`] drives it to the end; tests can also
/// step it manually.
pub struct Simulation<T: Real> {
    rwa: RwaConfig<T>,
    phi: HealthMatrix<T>,
    orbit: OrbitConfig<T>,
    schedule: GuidanceSchedule<T>,
    controller: AdaptiveController<T>,
    state: PlantState<T>,
    gamma_inv: DMatrix<T>,
    beta: T,
    dt: T,
    model: WheelTorqueModel,
    decimation: usize,
    n_control_steps: usize,
    k: usize,
    telemetry: Vec<TelemetryRecord<T>>,
    saturation: SaturationCounts,
    rank_loss_events: usize,
    phi_f64: DVector<f64>,
}

impl<T: Real> Simulation<T> {
    pub fn new(config: &ScenarioConfig) -> Self {
        let rwa = cast_rwa::<T>(&config.rwa);
        let gains = cast_gains::<T>(&config.gains);
        let n = rwa.n_wheels();
        let dt = c::<T>(config.dt);
        let decimation = config.control_decimation.max(1);
        let period = dt * T::from_usize(decimation).expect("small integer");
        let gamma_inv = gains
            .gamma
            .clone()
            .try_inverse()
            .unwrap_or_else(|| DMatrix::zeros(n, n));
        let beta = gains.beta;
        let controller = AdaptiveController::new(gains, rwa.clone(), period)
            .with_initial_estimate(cast_dv(&config.initial.theta_hat));
        let n_plant = (config.duration / config.dt + 1e-9).floor() as usize;
        Simulation {
            phi: HealthMatrix {
                phi: cast_dv(&config.phi_true.phi),
            },
            orbit: OrbitConfig {
                radius: c(config.orbit.radius),
                mu: c(config.orbit.mu),
                raan: c(config.orbit.raan),
                inclination: c(config.orbit.inclination),
                arg_latitude_epoch: c(config.orbit.arg_latitude_epoch),
            },
            schedule: GuidanceSchedule {
                segments: config
                    .schedule
                    .segments
                    .iter()
                    .map(|&(t, m)| (c(t), m))
                    .collect(),
            },
            state: PlantState {
                sigma: Mrp(cast_v3(&config.initial.sigma.0)),
                omega: cast_v3(&config.initial.omega),
                wheel_speeds: cast_dv(&config.initial.wheel_speeds),
                time: T::zero(),
            },
            controller,
            gamma_inv,
            beta,
            dt,
            model: config.wheel_torque_model,
            decimation,
            n_control_steps: n_plant / decimation,
            k: 0,
            telemetry: Vec::new(),
            saturation: SaturationCounts::new(n),
            rank_loss_events: 0,
            phi_f64: config.phi_true.phi.clone(),
            rwa,
        }
    }

    pub fn state(&self) -> &PlantState<T> {
        &self.state
    }

    pub fn controller(&self) -> &AdaptiveController<T> {
        &self.controller
    }

    pub fn is_done(&self) -> bool {
        self.k >= self.n_control_steps
    }

    /// One control update followed by `decimation` plant steps.
    pub fn step(&mut self) -> Result<(), PlantError> {
        let steps = T::from_usize(self.k * self.decimation).expect("step index fits scalar");
        let t = steps * self.dt;
        self.state.time = t;
        let reference = reference(t, &self.schedule, &self.orbit);
        let out = self.controller.update(&self.state, &reference);
        if !out.allocation.controllable() {
            self.rank_loss_events += 1;
        }

        let theta_err = &self.phi.phi - &out.theta_hat;
        let e = &out.aux.error;
        let half = T::lit(0.5);
        let v = e.r.norm_squared() * half
            + e.sigma_e.norm_squared() * self.beta * half
            + theta_err.dot(&(&self.gamma_inv * &theta_err)) * half;
        let (u_sat, torque_hit) = self.rwa.clamp_torque(&out.allocation.u);
        self.telemetry.push(TelemetryRecord {
            t,
            sigma_e: e.sigma_e.0,
            r: e.r,
            omega: self.state.omega,
            wheel_speeds: self.state.wheel_speeds.clone(),
            u_commanded: out.allocation.u.clone(),
            u_effective: u_sat.component_mul(&self.phi.phi),
            theta_hat: out.theta_hat.clone(),
            lambda_min: out.fe.lambda_min,
            fe_flag: out.fe.satisfied,
            lyapunov_v: v,
        });

        let mut speed_hit = vec![false; torque_hit.len()];
        for _ in 0..self.decimation {
            let rep = step_with_report(
                &self.state,
                &out.u_applied,
                &self.phi,
                &self.rwa,
                self.model,
                self.dt,
            )?;
            for (a, b) in speed_hit.iter_mut().zip(&rep.speed_limited) {
                *a |= *b;
            }
            self.state = rep.state;
        }
        self.saturation.record(&torque_hit, &speed_hit);
        self.k += 1;
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), PlantError> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(self) -> RunOutput<T> {
        let f64_records: Vec<TelemetryRecord<f64>> =
            self.telemetry.iter().map(to_f64_record).collect();
        let metrics = RunMetrics::compute(
            &f64_records,
            &self.phi_f64,
            self.controller.fe_status().fe_time.map(|t| t.to_f64()),
            self.rwa.max_speed.to_f64(),
            self.saturation,
            self.rank_loss_events,
        );
        RunOutput {
            telemetry: self.telemetry,
            metrics,
        }
    }
}
