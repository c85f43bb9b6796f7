//! Side-by-side comparison of two runs, e.g. the same scenario with and
//! without concurrent learning.

use std::fmt;

use thiserror::Error;

use super::telemetry::TelemetryRecord;

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("runs have different wheel counts ({a} vs {b})")]
    WheelCount { a: usize, b: usize },
    #[error("wheel {wheel} does not exist in a {n}-wheel array")]
    NoSuchWheel { wheel: usize, n: usize },
    #[error("a post-excitation window was requested but neither run reached the threshold")]
    NoFeTime,
    #[error("run `{0}` has no telemetry")]
    Empty(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    /// 1-based wheel indices.
    pub wheels: Vec<usize>,
    /// Start the averaging window at the excitation time of run A (or B).
    pub after_fe: bool,
    /// Delay added to the window start, s.
    pub settle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WheelComparison {
    pub wheel: usize,
    pub mean_abs_u_a: f64,
    pub mean_abs_u_b: f64,
    pub delta: f64,
    /// `mean_abs_u_a / mean_abs_u_b`; `None` when B is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub window_start: f64,
    pub fe_time_a: Option<f64>,
    pub fe_time_b: Option<f64>,
    pub wheels: Vec<WheelComparison>,
    pub final_sigma_e_norm: (f64, f64),
    /// Terminal `θ̂_b - θ̂_a` for every wheel.
    pub theta_hat_delta: Vec<f64>,
}

fn fe_time(run: &[TelemetryRecord<f64>]) -> Option<f64> {
    run.iter().find(|r| r.fe_flag).map(|r| r.t)
}

fn mean_abs(run: &[TelemetryRecord<f64>], wheel: usize, from: f64) -> f64 {
    let (sum, n) = run
        .iter()
        .filter(|r| r.t >= from)
        .fold((0.0, 0usize), |(s, n), r| {
            (s + r.u_commanded[wheel].abs(), n + 1)
        });
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean allocated torque magnitude per selected wheel over a common window.
pub fn compare_runs(
    a: &[TelemetryRecord<f64>],
    b: &[TelemetryRecord<f64>],
    opts: &CompareOptions,
) -> Result<ComparisonReport, CompareError> {
    let last_a = a.last().ok_or(CompareError::Empty("a"))?;
    let last_b = b.last().ok_or(CompareError::Empty("b"))?;
    let n = last_a.n_wheels();
    if last_b.n_wheels() != n {
        return Err(CompareError::WheelCount {
            a: n,
            b: last_b.n_wheels(),
        });
    }
    if let Some(&w) = opts.wheels.iter().find(|&&w| w == 0 || w > n) {
        return Err(CompareError::NoSuchWheel { wheel: w, n });
    }
    let fe_a = fe_time(a);
    let fe_b = fe_time(b);
    let base = if opts.after_fe {
        fe_a.or(fe_b).ok_or(CompareError::NoFeTime)?
    } else {
        0.0
    };
    let window_start = base + opts.settle;
    let wheels = opts
        .wheels
        .iter()
        .map(|&w| {
            let ma = mean_abs(a, w - 1, window_start);
            let mb = mean_abs(b, w - 1, window_start);
            WheelComparison {
                wheel: w,
                mean_abs_u_a: ma,
                mean_abs_u_b: mb,
                delta: mb - ma,
                ratio: (mb != 0.0).then(|| ma / mb),
            }
        })
        .collect();
    Ok(ComparisonReport {
        window_start,
        fe_time_a: fe_a,
        fe_time_b: fe_b,
        wheels,
        final_sigma_e_norm: (last_a.sigma_e.norm(), last_b.sigma_e.norm()),
        theta_hat_delta: (&last_b.theta_hat - &last_a.theta_hat)
            .iter()
            .copied()
            .collect(),
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fe = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t:.1} s"));
        writeln!(
            f,
            "fe_time        A: {}   B: {}",
            fe(self.fe_time_a),
            fe(self.fe_time_b)
        )?;
        writeln!(f, "window start   {:.1} s", self.window_start)?;
        writeln!(
            f,
            "final |sigma_e|  A: {:.3e}  B: {:.3e}",
            self.final_sigma_e_norm.0, self.final_sigma_e_norm.1
        )?;
        writeln!(f, "wheel  mean|u| A   mean|u| B   delta(B-A)   ratio A/B")?;
        for w in &self.wheels {
            let ratio = w.ratio.map_or("-".to_string(), |r| format!("{r:.4}"));
            writeln!(
                f,
                "{:>5}  {:>10.3e}  {:>10.3e}  {:>11.3e}   {ratio}",
                w.wheel, w.mean_abs_u_a, w.mean_abs_u_b, w.delta
            )?;
        }
        let th: Vec<String> = self
            .theta_hat_delta
            .iter()
            .map(|d| format!("{d:+.4}"))
            .collect();
        write!(f, "terminal theta_hat delta (B-A): [{}]", th.join(", "))
    }
}
