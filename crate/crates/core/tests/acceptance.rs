//! Acceptance suite. Prints one PASS/FAIL line per criterion for the
//! tabulated configuration, then repeats the simulation criteria with the
//! small wheel inertia. Exits nonzero on any failure not covered by
//! `known_failing`.

mod common;

use common::{
    allocation_oracle_error, icl_window, lambda_min_monotone, momentum_drift, mrp,
    random_adaptation, rk4_order, rng, vec3, INSTANCES,
};
use nalgebra::Matrix3;
use rwa_icl::attitude::{b_matrix, b_matrix_dot, mrp_to_dcm, r_tilde, Mrp};
use rwa_icl::harness::metrics::exponential_fit;
use rwa_icl::harness::{compare_runs, presets, run, CompareOptions, RunOutput, ScenarioConfig};

/// Tabulated wheel inertia, kg·m².
const TABULATED_J_RW: f64 = 5.7296e5;
/// Physically plausible reading of the same table entry.
const SMALL_J_RW: f64 = 5.7296e-5;

/// Criteria that fail for a documented reason, per wheel inertia.
/// 5: the fit window necessarily contains the 1440 s reference step.
/// 3 (small J_RW only): the slews need more momentum than the wheels store.
fn known_failing(id: u32, j_rw: f64) -> bool {
    id == 5 || (id == 3 && j_rw == SMALL_J_RW)
}

struct Report {
    unexpected: Vec<String>,
}

impl Report {
    fn line(&mut self, label: &str, known: bool, title: &str, pass: bool, detail: String) {
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                self.unexpected.push(label.to_string());
                "FAIL"
            }
        };
        println!("[{label}] {tag:<12} {title}: {detail}");
    }
}

struct Runs {
    case1: (ScenarioConfig, RunOutput<f64>),
    case2: (ScenarioConfig, RunOutput<f64>),
    case3: (ScenarioConfig, RunOutput<f64>),
    case4: (ScenarioConfig, RunOutput<f64>),
    case3_no_icl: (ScenarioConfig, RunOutput<f64>),
}

fn simulate(name: &str, j_rw: f64) -> (ScenarioConfig, RunOutput<f64>) {
    let mut c = presets::preset(name).expect("preset exists");
    c.rwa.j_rw = j_rw;
    let out = run(&c).unwrap_or_else(|e| panic!("{name} (J_RW {j_rw:e}): {e}"));
    (c, out)
}

impl Runs {
    fn new(j_rw: f64) -> Self {
        Runs {
            case1: simulate("case1", j_rw),
            case2: simulate("case2", j_rw),
            case3: simulate("case3", j_rw),
            case4: simulate("case4", j_rw),
            case3_no_icl: simulate("case3-no-icl", j_rw),
        }
    }
}

fn criterion_1(runs: &Runs) -> (bool, String) {
    let out = &runs.case1.1;
    let m = &out.metrics;
    let th = &m.terminal_theta_hat;
    let lam_at_fe = out
        .telemetry
        .iter()
        .find(|r| r.fe_flag)
        .map(|r| r.lambda_min);
    let pass = m.fe_time.is_some_and(|t| t < 2500.0)
        && lam_at_fe.is_some_and(|l| l >= 1e-7)
        && th[2].abs() <= 0.05
        && [0, 1, 3].iter().all(|&i| (th[i] - 1.0).abs() <= 0.15)
        && m.final_sigma_e_norm.is_some_and(|e| e <= 0.01);
    let detail = format!(
        "fe {:?} s (lambda_min {:.2e}), theta_hat {:.4?}, |sigma_e| {:.2e}",
        m.fe_time,
        lam_at_fe.unwrap_or(f64::NAN),
        th,
        m.final_sigma_e_norm.unwrap_or(f64::NAN)
    );
    (pass, detail)
}

fn criterion_2(runs: &Runs) -> (bool, String) {
    let out = &runs.case2.1;
    let bounded = out
        .telemetry
        .iter()
        .all(|r| r.theta_hat.iter().all(|&x| (0.0..=1.0).contains(&x)));
    let e = out.metrics.final_sigma_e_norm.unwrap_or(f64::NAN);
    (
        bounded && e <= 0.01,
        format!("|sigma_e| {e:.2e}, theta_hat within [0, 1] throughout: {bounded}"),
    )
}

fn criterion_3(runs: &Runs) -> (bool, String) {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, (c, out), phi) in [
        ("case3", &runs.case3, [0.0, 0.0, 1.0, 1.0, 1.0, 1.0]),
        ("case4", &runs.case4, [0.0, 0.3, 1.0, 1.0, 1.0, 1.0]),
    ] {
        let m = &out.metrics;
        let err = m
            .terminal_theta_hat
            .iter()
            .zip(phi)
            .map(|(t, p)| (t - p).abs())
            .fold(0.0, f64::max);
        let torque: usize = m.saturation.torque[2..].iter().sum();
        let speed: usize = m.saturation.speed[2..].iter().sum();
        pass &= c.phi_true.phi.as_slice() == phi
            && c.gains.lambda_bar == 8e-9
            && err <= 0.05
            && torque + speed == 0;
        detail.push(format!(
            "{name} max |theta_hat - phi| {err:.2e}, limited steps on wheels 3-6 torque {torque} speed {speed}"
        ));
    }
    (pass, detail.join("; "))
}

fn criterion_4(runs: &Runs) -> (bool, String) {
    let opts = CompareOptions {
        wheels: vec![1, 2],
        after_fe: true,
        settle: 200.0,
    };
    match compare_runs(
        &runs.case3.1.telemetry,
        &runs.case3_no_icl.1.telemetry,
        &opts,
    ) {
        Ok(c) => {
            let pass = c
                .wheels
                .iter()
                .all(|w| w.mean_abs_u_a <= 0.05 * w.mean_abs_u_b);
            let parts: Vec<String> = c
                .wheels
                .iter()
                .map(|w| {
                    format!(
                        "u{} {:.2e} vs {:.2e} ({:.2}%)",
                        w.wheel,
                        w.mean_abs_u_a,
                        w.mean_abs_u_b,
                        100.0 * w.mean_abs_u_a / w.mean_abs_u_b
                    )
                })
                .collect();
            (
                pass,
                format!("window from {:.0} s: {}", c.window_start, parts.join(", ")),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn criterion_5(runs: &Runs) -> (bool, String) {
    let (c, out) = &runs.case1;
    let Some(t) = out.metrics.fe_time else {
        return (false, "no fe_time".into());
    };
    let phi = &c.phi_true.phi;
    let Some(fit) = exponential_fit(&out.telemetry, phi, t, 1000.0) else {
        return (false, "fit failed".into());
    };
    let pass = fit.slope <= -1e-3 && fit.max_envelope_ratio <= 1.5;
    // Same fit stopped before the next reference switch, for context.
    let next = c
        .schedule
        .switch_times()
        .find(|&s| s > t)
        .unwrap_or(t + 1000.0);
    let clean = exponential_fit(&out.telemetry, phi, t, (next - t - 0.1).min(1000.0));
    let detail = format!(
        "[{:.0}, {:.0}] s slope {:.2e}/s, envelope ratio {:.3e}{}",
        fit.start,
        fit.end,
        fit.slope,
        fit.max_envelope_ratio,
        clean.map_or(String::new(), |f| format!(
            "; up to the {next:.0} s switch: slope {:.2e}/s, ratio {:.3}",
            f.slope, f.max_envelope_ratio
        ))
    );
    (pass, detail)
}

fn criterion_6(runs: &Runs) -> (bool, String) {
    let (c, out) = &runs.case1;
    let period = c.control_period();
    let switches: Vec<f64> = c.schedule.switch_times().filter(|&s| s > 0.0).collect();
    // A difference V(k+1) - V(k) is excluded when step k+1 is one of the
    // first ten control steps on a new reference.
    let excluded = |t_next: f64| {
        switches
            .iter()
            .any(|&s| t_next >= s - 0.5 * period && t_next < s + 10.5 * period)
    };
    let (mut total, mut good) = (0usize, 0usize);
    for w in out.telemetry.windows(2) {
        if excluded(w[1].t) {
            continue;
        }
        total += 1;
        good += (w[1].lyapunov_v - w[0].lyapunov_v <= 1e-8) as usize;
    }
    let frac = good as f64 / total as f64;
    (
        frac >= 0.999,
        format!(
            "{good}/{total} steps with dV <= 1e-8 ({:.3}%)",
            100.0 * frac
        ),
    )
}

type RunCriterion = fn(&Runs) -> (bool, String);

const RUN_CRITERIA: [(u32, &str, RunCriterion); 6] = [
    (
        1,
        "case 1 FE before 2500 s, wheel 3 identified, tracking",
        criterion_1,
    ),
    (
        2,
        "case 2 (K1 = 0) tracks with bounded estimates",
        criterion_2,
    ),
    (
        3,
        "cases 3/4 estimation error <= 0.05, no saturation on wheels 3-6",
        criterion_3,
    ),
    (4, "case 3 ICL on/off mean |u1|,|u2| <= 5%", criterion_4),
    (
        5,
        "case 1 exponential envelope over [T, T+1000 s]",
        criterion_5,
    ),
    (6, "case 1 Lyapunov function non-increasing", criterion_6),
];

fn criterion_7(rep: &mut Report) {
    let drifts: Vec<f64> = [TABULATED_J_RW, SMALL_J_RW]
        .iter()
        .map(|&j| momentum_drift(j, 4000.0, 0.1))
        .collect();
    let order = rk4_order();
    let pass = drifts.iter().all(|&d| d <= 1e-8) && order >= 3.8;
    rep.line(
        "7",
        false,
        "momentum conservation and RK4 order",
        pass,
        format!(
            "relative drift {:.2e} / {:.2e} over 4000 s, observed order {order:.3}",
            drifts[0], drifts[1]
        ),
    );
}

fn criterion_8(rep: &mut Report) {
    let n = INSTANCES;
    let mut r = rng(800);
    let mut fails = Vec::new();
    let mut count = |name: &str, ok: usize| {
        if ok != n {
            fails.push(format!("{name} {ok}/{n}"));
        }
    };

    let mut ok = [0usize; 4];
    for _ in 0..n {
        let s = mrp(&mut r, 2.0);
        let k = (1.0 + s.norm_squared()).powi(2);
        ok[0] += ((b_matrix(&s) * b_matrix(&s).transpose() - Matrix3::identity() * k)
            .abs()
            .max()
            < 1e-12 * k) as usize;

        let e = mrp(&mut r, 1.0);
        let rt = r_tilde(&e);
        ok[1] += ((rt * rt.transpose() - Matrix3::identity()).abs().max() < 1e-12
            && (rt.determinant() - 1.0).abs() < 1e-12) as usize;

        let sd = vec3(&mut r, 0.5);
        let h = 1e-3;
        let fd = (b_matrix(&Mrp(e.0 + sd * h)) - b_matrix(&Mrp(e.0 - sd * h))) / (2.0 * h);
        ok[2] += ((fd - b_matrix_dot(&e, &sd)).abs().max() < 1e-9) as usize;

        ok[3] += ((mrp_to_dcm(&s) - mrp_to_dcm(&s.shadow())).abs().max() < 1e-12) as usize;
    }
    count("B B^T", ok[0]);
    count("R~ in SO(3)", ok[1]);
    count("B-dot FD", ok[2]);
    count("shadow DCM", ok[3]);

    count(
        "allocation oracle",
        (0..n as u64)
            .filter(|&s| allocation_oracle_error(s) <= 1e-9)
            .count(),
    );
    count(
        "ICL residual O(dt^2)",
        (0..n as u64)
            .filter(|&s| {
                let (c, phi) = icl_window(s, 0.1, 1.0);
                let (f, _) = icl_window(s, 0.05, 1.0);
                let (rc, rf) = (c.residual(&phi).norm(), f.residual(&phi).norm());
                rc < 1e-12 || (rc / rf).log2() > 1.8
            })
            .count(),
    );
    count(
        "lambda_min monotone",
        (0..n as u64).filter(|&s| lambda_min_monotone(s)).count(),
    );
    count(
        "projection",
        (0..n as u64)
            .filter(|&s| random_adaptation(s).iter().all(|x| (0.0..=1.0).contains(x)))
            .count(),
    );
    let pass = fails.is_empty();
    let detail = if pass {
        format!("8 property families x {n} seeded instances")
    } else {
        fails.join(", ")
    };
    rep.line(
        "8",
        false,
        "attitude/allocation/ICL/projection property suites",
        pass,
        detail,
    );
}

fn main() {
    let mut rep = Report {
        unexpected: Vec::new(),
    };
    let tabulated = Runs::new(TABULATED_J_RW);
    for (id, title, f) in RUN_CRITERIA {
        let (pass, detail) = f(&tabulated);
        rep.line(
            &id.to_string(),
            known_failing(id, TABULATED_J_RW),
            title,
            pass,
            detail,
        );
    }
    criterion_7(&mut rep);
    criterion_8(&mut rep);

    println!("-- wheel inertia sensitivity, J_RW = {SMALL_J_RW:e} kg m^2");
    let small = Runs::new(SMALL_J_RW);
    for (id, title, f) in RUN_CRITERIA {
        let (pass, detail) = f(&small);
        rep.line(
            &format!("{id}s"),
            known_failing(id, SMALL_J_RW),
            title,
            pass,
            detail,
        );
    }

    if !rep.unexpected.is_empty() {
        eprintln!("unexpected failures: {:?}", rep.unexpected);
        std::process::exit(1);
    }
}
