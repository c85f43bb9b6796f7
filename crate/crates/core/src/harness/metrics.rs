//! Run summaries computed from telemetry.

use nalgebra::DVector;

use super::telemetry::TelemetryRecord;

/// Length of the window used for the exponential-rate fit after the
/// excitation threshold is reached, s.
pub const EXP_FIT_WINDOW: f64 = 1000.0;

/// Per-wheel count of control steps during which a limit was active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationCounts {
    pub torque: Vec<usize>,
    pub speed: Vec<usize>,
}

impl SaturationCounts {
    pub fn new(n: usize) -> Self {
        SaturationCounts {
            torque: vec![0; n],
            speed: vec![0; n],
        }
    }

    pub fn record(&mut self, torque_hit: &[bool], speed_hit: &[bool]) {
        for (c, &h) in self.torque.iter_mut().zip(torque_hit) {
            *c += h as usize;
        }
        for (c, &h) in self.speed.iter_mut().zip(speed_hit) {
            *c += h as usize;
        }
    }

    /// Steps with either limit active, per wheel.
    pub fn total(&self) -> Vec<usize> {
        self.torque
            .iter()
            .zip(&self.speed)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Least-squares line through `ln‖η‖` with `η = (r, σ_e, θ̃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub start: f64,
    pub end: f64,
    /// Fitted decay rate, 1/s (negative means decaying).
    pub slope: f64,
    pub intercept: f64,
    /// Largest `‖η(t)‖ / exp(intercept + slope t)` over the window.
    pub max_envelope_ratio: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub steps: usize,
    pub final_sigma_e_norm: Option<f64>,
    pub fe_time: Option<f64>,
    /// `|θ̂ᵢ - φᵢ|` at the last record.
    pub terminal_estimation_error: Vec<f64>,
    pub terminal_theta_hat: Vec<f64>,
    /// Largest `|Ωᵢ| / Ω_max` over the run.
    pub max_wheel_speed_fraction: f64,
    pub saturation: SaturationCounts,
    /// Control steps at which `G Φ̂` lost rank.
    pub rank_loss_events: usize,
    pub exp_fit: Option<ExpFit>,
}

/// `‖(r, σ_e, θ̃)‖` for one record.
pub fn composite_error_norm(rec: &TelemetryRecord<f64>, phi: &DVector<f64>) -> f64 {
    let th = phi - &rec.theta_hat;
    (rec.r.norm_squared() + rec.sigma_e.norm_squared() + th.norm_squared()).sqrt()
}

/// Fits `ln‖η‖ ≈ a + b t` over records with `t` in `[start, start + window]`.
pub fn exponential_fit(
    telemetry: &[TelemetryRecord<f64>],
    phi: &DVector<f64>,
    start: f64,
    window: f64,
) -> Option<ExpFit> {
    let pts: Vec<(f64, f64)> = telemetry
        .iter()
        .filter(|r| r.t >= start && r.t <= start + window)
        .map(|r| (r.t, composite_error_norm(r, phi)))
        .filter(|&(_, y)| y > 0.0)
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in &pts {
        sxy += (t - mt) * (y.ln() - my);
        sxx += (t - mt) * (t - mt);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let max_envelope_ratio = pts
        .iter()
        .map(|&(t, y)| y / (intercept + slope * t).exp())
        .fold(0.0, f64::max);
    Some(ExpFit {
        start: pts[0].0,
        end: pts[pts.len() - 1].0,
        slope,
        intercept,
        max_envelope_ratio,
        samples: pts.len(),
    })
}

impl RunMetrics {
    pub fn compute(
        telemetry: &[TelemetryRecord<f64>],
        phi: &DVector<f64>,
        fe_time: Option<f64>,
        max_speed: f64,
        saturation: SaturationCounts,
        rank_loss_events: usize,
    ) -> Self {
        let last = telemetry.last();
        let max_wheel_speed_fraction = telemetry
            .iter()
            .flat_map(|r| r.wheel_speeds.iter())
            .fold(0.0_f64, |m, w| m.max(w.abs() / max_speed));
        RunMetrics {
            steps: telemetry.len(),
            final_sigma_e_norm: last.map(|r| r.sigma_e.norm()),
            fe_time,
            terminal_estimation_error: last
                .map(|r| (phi - &r.theta_hat).abs().iter().copied().collect())
                .unwrap_or_default(),
            terminal_theta_hat: last
                .map(|r| r.theta_hat.iter().copied().collect())
                .unwrap_or_default(),
            max_wheel_speed_fraction,
            saturation,
            rank_loss_events,
            exp_fit: fe_time.and_then(|t| exponential_fit(telemetry, phi, t, EXP_FIT_WINDOW)),
        }
    }
}
