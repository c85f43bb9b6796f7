//! Adaptive attitude tracking law with online wheel-health estimation.
//!
//! Each control step computes a three-axis torque demand `u_d` from the
//! filtered tracking error, distributes it over the wheels through the
//! pseudo-inverse of `G Φ̂`, and updates the health estimate `θ̂` with a
//! gradient term plus an integral concurrent learning (ICL) term built
//! from the history stack.

pub mod icl;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};
use thiserror::Error;

use crate::attitude::{b_matrix, b_matrix_dot, b_matrix_inverse, mrp_error, r_tilde, skew, Mrp};
use crate::guidance::ReferenceSample;
use crate::linalg::{is_positive_definite, is_positive_semidefinite};
use crate::plant::{PlantState, RwaConfig};
use crate::scalar::Real;

pub use icl::{icl_accumulate, FeStatus, HistoryStack, IclBuffer, IclPair, IclSample};

/// Relative singular-value tolerance for the allocation rank test.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GainError {
    #[error("gain `{0}` must be symmetric positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("gain `{0}` must be symmetric positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("gain `{field}` is {found}x{found}, expected {expected}x{expected}")]
    Dimension {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("gain `{field}`: {reason}")]
    InvalidValue { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains<T: Real> {
    /// Filtered-error feedback gain.
    pub k: Matrix3<T>,
    /// Filter gain in `r = σ̇_e + α σ_e`.
    pub alpha: Matrix3<T>,
    /// Attitude-error feedback gain.
    pub beta: T,
    /// Adaptation gain, N×N.
    pub gamma: DMatrix<T>,
    /// ICL gain, N×N; zero disables concurrent learning.
    pub k1: DMatrix<T>,
    /// Finite-excitation threshold on the stack's minimum eigenvalue.
    pub lambda_bar: T,
    /// History stack capacity.
    pub n_s: usize,
    /// ICL integration window, s.
    pub delta_t: T,
    /// Projection bounds applied to every component of `θ̂`.
    pub theta_bounds: (T, T),
}

impl<T: Real> ControllerGains<T> {
    pub fn validate(&self, n_wheels: usize) -> Result<(), GainError> {
        let k = DMatrix::from_iterator(3, 3, self.k.iter().copied());
        let alpha = DMatrix::from_iterator(3, 3, self.alpha.iter().copied());
        if !is_positive_definite(&k) {
            return Err(GainError::NotPositiveDefinite("k"));
        }
        if !is_positive_definite(&alpha) {
            return Err(GainError::NotPositiveDefinite("alpha"));
        }
        for (field, m) in [("gamma", &self.gamma), ("k1", &self.k1)] {
            if m.nrows() != n_wheels || m.ncols() != n_wheels {
                return Err(GainError::Dimension {
                    field,
                    expected: n_wheels,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        if !is_positive_definite(&self.gamma) {
            return Err(GainError::NotPositiveDefinite("gamma"));
        }
        if !is_positive_semidefinite(&self.k1) {
            return Err(GainError::NotPositiveSemidefinite("k1"));
        }
        let positive = |field: &'static str, v: T| {
            if v > T::zero() && v.is_finite_value() {
                Ok(())
            } else {
                Err(GainError::InvalidValue {
                    field,
                    reason: format!("must be positive, got {v}"),
                })
            }
        };
        positive("beta", self.beta)?;
        positive("lambda_bar", self.lambda_bar)?;
        positive("delta_t", self.delta_t)?;
        if self.n_s == 0 {
            return Err(GainError::InvalidValue {
                field: "n_s",
                reason: "stack capacity must be at least 1".into(),
            });
        }
        let (lo, hi) = self.theta_bounds;
        if !(lo <= hi) {
            return Err(GainError::InvalidValue {
                field: "theta_bounds",
                reason: format!("lower bound {lo} exceeds upper bound {hi}"),
            });
        }
        Ok(())
    }

    pub fn icl_enabled(&self) -> bool {
        self.k1.iter().any(|&x| x != T::zero())
    }
}

/// Current health estimate `θ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate<T: Real> {
    pub theta_hat: DVector<T>,
}

impl<T: Real> ThetaEstimate<T> {
    pub fn healthy(n: usize) -> Self {
        ThetaEstimate {
            theta_hat: DVector::from_element(n, T::one()),
        }
    }

    pub fn project(&mut self, bounds: (T, T)) {
        for x in self.theta_hat.iter_mut() {
            *x = x.max(bounds.0).min(bounds.1);
        }
    }
}

/// `r = σ̇_e + α σ_e`.
pub fn filtered_error<T: Real>(
    sigma_e: &Mrp<T>,
    sigma_e_dot: &Vector3<T>,
    alpha: &Matrix3<T>,
) -> Vector3<T> {
    sigma_e_dot + alpha * sigma_e.vector()
}

/// Tracking-error quantities shared by the control and adaptation laws.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingError<T: Real> {
    pub sigma_e: Mrp<T>,
    pub sigma_e_dot: Vector3<T>,
    /// Body rate relative to the desired frame, body coordinates.
    pub omega_tilde: Vector3<T>,
    pub r: Vector3<T>,
    pub b: Matrix3<T>,
    pub r_tilde: Matrix3<T>,
}

impl<T: Real> TrackingError<T> {
    pub fn new(state: &PlantState<T>, reference: &ReferenceSample<T>, alpha: &Matrix3<T>) -> Self {
        let sigma_e = mrp_error(&state.sigma, &reference.sigma_d);
        let r_tilde = r_tilde(&sigma_e);
        let omega_tilde = state.omega - r_tilde * reference.omega_d;
        let b = b_matrix(&sigma_e);
        let sigma_e_dot = b * omega_tilde * T::lit(0.25);
        TrackingError {
            r: filtered_error(&sigma_e, &sigma_e_dot, alpha),
            sigma_e,
            sigma_e_dot,
            omega_tilde,
            b,
            r_tilde,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryControl<T: Real> {
    /// Three-axis torque demand, N·m.
    pub u_d: Vector3<T>,
    pub error: TrackingError<T>,
}

/// Torque demand that cancels the gyroscopic and reference terms and
/// imposes `ṙ = -K r - β σ_e` when the health estimate is exact.
pub fn auxiliary_control<T: Real>(
    state: &PlantState<T>,
    reference: &ReferenceSample<T>,
    gains: &ControllerGains<T>,
    cfg: &RwaConfig<T>,
) -> AuxiliaryControl<T> {
    let e = TrackingError::new(state, reference, &gains.alpha);
    let j = cfg.j_body;
    let h = state.body_momentum(cfg);
    let b_dot = b_matrix_dot(&e.sigma_e, &e.sigma_e_dot);
    let rw_d = e.r_tilde * reference.omega_d;

    let inner = -(b_dot * e.omega_tilde) * T::lit(0.25)
        - gains.alpha * e.sigma_e_dot
        - gains.k * e.r
        - e.sigma_e.vector() * gains.beta;
    let u_d = state.omega.cross(&h) + j * (e.r_tilde * reference.omega_d_dot)
        - j * (skew(&e.omega_tilde) * rw_d)
        + j * (b_matrix_inverse(&e.sigma_e) * inner) * T::lit(4.0);
    AuxiliaryControl { u_d, error: e }
}

/// `Y = G diag(u)`, so that `Y θ = G Φ u` with `θ` the diagonal of `Φ`.
pub fn regressor<T: Real>(u: &DVector<T>, g: &Matrix3xX<T>) -> Matrix3xX<T> {
    let mut y = g.clone();
    for (mut col, &ui) in y.column_iter_mut().zip(u.iter()) {
        col *= ui;
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T: Real> {
    /// Minimum-norm wheel torques, before any limiting.
    pub u: DVector<T>,
    /// Numerical rank of `G Φ̂`.
    pub rank: usize,
}

impl<T: Real> Allocation<T> {
    /// `false` when `G Φ̂` can no longer produce torque about every axis.
    pub fn controllable(&self) -> bool {
        self.rank >= 3
    }
}

/// Minimum-norm least-squares allocation `u = (G Φ̂)† u_d`.
///
/// Wheels whose estimate is exactly zero are excluded before the
/// pseudo-inverse, which leaves their torque at exactly zero.
pub fn allocate<T: Real>(
    u_d: &Vector3<T>,
    theta_hat: &ThetaEstimate<T>,
    g: &Matrix3xX<T>,
) -> Allocation<T> {
    let n = g.ncols();
    let active: Vec<usize> = (0..n)
        .filter(|&i| theta_hat.theta_hat[i] != T::zero())
        .collect();
    let mut u = DVector::zeros(n);
    if active.is_empty() {
        return Allocation { u, rank: 0 };
    }
    let a = DMatrix::from_fn(3, active.len(), |r, c| {
        let i = active[c];
        g[(r, i)] * theta_hat.theta_hat[i]
    });
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = T::lit(RANK_TOLERANCE) * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let ud = DVector::from_column_slice(u_d.as_slice());
    // tol > 0 is required by nalgebra; fall back to zero torque when the
    // matrix itself is zero.
    let sub = if smax > T::zero() {
        svd.solve(&ud, tol)
            .unwrap_or_else(|_| DVector::zeros(active.len()))
    } else {
        DVector::zeros(active.len())
    };
    for (c, &i) in active.iter().enumerate() {
        u[i] = sub[c];
    }
    Allocation { u, rank }
}

/// One explicit-Euler step of the adaptation law followed by projection.
#[allow(clippy::too_many_arguments)]
pub fn adaptation_step<T: Real>(
    theta_hat: &ThetaEstimate<T>,
    r: &Vector3<T>,
    b: &Matrix3<T>,
    y: &Matrix3xX<T>,
    stack: &HistoryStack<T>,
    gains: &ControllerGains<T>,
    cfg: &RwaConfig<T>,
    dt: T,
) -> ThetaEstimate<T> {
    let j_inv = cfg.j_body_inverse();
    let gradient =
        &gains.gamma * (y.transpose() * (j_inv.transpose() * (b.transpose() * r))) * T::lit(0.25);
    let mut rate = gradient;
    if !stack.is_empty() {
        rate += &gains.gamma * (&gains.k1 * stack.icl_sum(&theta_hat.theta_hat));
    }
    let mut next = ThetaEstimate {
        theta_hat: &theta_hat.theta_hat + rate * dt,
    };
    next.project(gains.theta_bounds);
    next
}

/// Per-step controller outputs, including the estimate used for this step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput<T: Real> {
    pub aux: AuxiliaryControl<T>,
    pub allocation: Allocation<T>,
    /// Allocated torque after the wheel torque limit.
    pub u_applied: DVector<T>,
    pub theta_hat: DVector<T>,
    pub fe: FeStatus<T>,
}

/// Controller state owned by one simulation loop.
#[derive(Debug, Clone)]
pub struct AdaptiveController<T: Real> {
    gains: ControllerGains<T>,
    rwa: RwaConfig<T>,
    theta: ThetaEstimate<T>,
    stack: HistoryStack<T>,
    buffer: IclBuffer<T>,
    period: T,
    next_window_end: Option<T>,
}

impl<T: Real> AdaptiveController<T> {
    /// `period` is the control update interval; gains are assumed validated.
    pub fn new(gains: ControllerGains<T>, rwa: RwaConfig<T>, period: T) -> Self {
        let n = rwa.n_wheels();
        AdaptiveController {
            stack: HistoryStack::new(n, gains.n_s, gains.lambda_bar),
            theta: ThetaEstimate::healthy(n),
            buffer: IclBuffer::new(),
            gains,
            rwa,
            period,
            next_window_end: None,
        }
    }

    pub fn with_initial_estimate(mut self, theta_hat: DVector<T>) -> Self {
        self.theta = ThetaEstimate { theta_hat };
        self.theta.project(self.gains.theta_bounds);
        self
    }

    pub fn gains(&self) -> &ControllerGains<T> {
        &self.gains
    }

    pub fn theta_hat(&self) -> &DVector<T> {
        &self.theta.theta_hat
    }

    pub fn stack(&self) -> &HistoryStack<T> {
        &self.stack
    }

    pub fn fe_status(&self) -> FeStatus<T> {
        self.stack.status()
    }

    /// Computes the wheel torques for `state`, records ICL data, and
    /// advances the health estimate by one control period.
    pub fn update(
        &mut self,
        state: &PlantState<T>,
        reference: &ReferenceSample<T>,
    ) -> ControlOutput<T> {
        let aux = auxiliary_control(state, reference, &self.gains, &self.rwa);
        let allocation = allocate(&aux.u_d, &self.theta, &self.rwa.g);
        let (u_applied, _) = self.rwa.clamp_torque(&allocation.u);
        let y = regressor(&u_applied, &self.rwa.g);

        self.record(state, y.clone());

        let theta_used = self.theta.theta_hat.clone();
        self.theta = adaptation_step(
            &self.theta,
            &aux.error.r,
            &aux.error.b,
            &y,
            &self.stack,
            &self.gains,
            &self.rwa,
            self.period,
        );
        ControlOutput {
            fe: self.stack.status(),
            aux,
            allocation,
            u_applied,
            theta_hat: theta_used,
        }
    }

    fn record(&mut self, state: &PlantState<T>, y: Matrix3xX<T>) {
        let t = state.time;
        self.buffer.push(IclSample {
            t,
            omega: state.omega,
            wheel_speeds: state.wheel_speeds.clone(),
            y,
        });
        let window = self.gains.delta_t;
        let end = *self.next_window_end.get_or_insert(t + window);
        // Sample times carry round-off; a window closes within half a period.
        if t + self.period * T::lit(0.5) < end {
            return;
        }
        if let Some(mut pair) = icl_accumulate(&self.buffer, t, window, &self.rwa) {
            pair.t_i = t;
            if pair.has_information() {
                self.stack.insert(pair);
            }
        }
        self.buffer.discard_before(t);
        self.next_window_end = Some(t + window);
    }
}
