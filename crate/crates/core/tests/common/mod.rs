#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwa_icl::attitude::{mrp_to_dcm, Mrp};
use rwa_icl::controller::regressor;
use rwa_icl::controller::{
    adaptation_step, allocate, icl_accumulate, ControllerGains, HistoryStack, IclBuffer, IclPair,
    IclSample, ThetaEstimate,
};
use rwa_icl::harness::presets::{AXES_4, AXES_6, BODY_INERTIA};
use rwa_icl::plant::{step, HealthMatrix, PlantState, RwaConfig, WheelTorqueModel};

pub const INSTANCES: usize = 128;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec3(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

/// Random MRP with norm below `max_norm`.
pub fn mrp(rng: &mut ChaCha8Rng, max_norm: f64) -> Mrp<f64> {
    loop {
        let v = vec3(rng, max_norm);
        if v.norm() < max_norm {
            return Mrp(v);
        }
    }
}

pub fn axes4() -> Matrix3xX<f64> {
    Matrix3xX::from_fn(4, |r, c| AXES_4[r][c])
}

pub fn axes6() -> Matrix3xX<f64> {
    Matrix3xX::from_fn(6, |r, c| AXES_6[r][c])
}

pub fn rwa(g: Matrix3xX<f64>, j_rw: f64) -> RwaConfig<f64> {
    RwaConfig {
        g,
        j_rw,
        max_torque: 0.02,
        max_speed: 1047.2,
        j_body: Matrix3::from_diagonal(&Vector3::from(BODY_INERTIA)),
    }
}

/// Relative drift of the inertially resolved angular momentum of a torque
/// free, tumbling spacecraft with spinning wheels.
pub fn momentum_drift(j_rw: f64, duration: f64, dt: f64) -> f64 {
    let cfg = rwa(axes4(), j_rw);
    let phi = HealthMatrix::healthy(4);
    let u = DVector::zeros(4);
    let mut s = PlantState {
        sigma: Mrp::new(0.1, -0.2, 0.3),
        omega: Vector3::new(0.02, -0.01, 0.015),
        // Same stored wheel momentum whatever the wheel inertia.
        wheel_speeds: DVector::from_vec(vec![50.0, -20.0, 10.0, 5.0]) * (5.7296e-5 / j_rw),
        time: 0.0,
    };
    let h0 = s.inertial_momentum(&cfg);
    let steps = (duration / dt).round() as usize;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        s = step(&s, &u, &phi, &cfg, WheelTorqueModel::Effective, dt).unwrap();
        worst = worst.max((s.inertial_momentum(&cfg) - h0).norm() / h0.norm());
    }
    worst
}

/// Observed RK4 order by step halving on a torqued tumble, measured on the
/// attitude DCM, body rate and wheel speeds at a fixed horizon.
pub fn rk4_order() -> f64 {
    let cfg = rwa(axes4(), 5.7296e-5);
    let phi = HealthMatrix::new(DVector::from_vec(vec![1.0, 0.6, 0.0, 0.9])).unwrap();
    let u = DVector::from_vec(vec![0.01, -0.005, 0.003, 0.008]);
    let run = |dt: f64| {
        let mut s = PlantState {
            sigma: Mrp::new(0.05, 0.1, -0.1),
            omega: Vector3::new(0.3, -0.2, 0.25),
            wheel_speeds: DVector::from_vec(vec![100.0, -50.0, 30.0, 0.0]),
            time: 0.0,
        };
        let n = (4.0 / dt).round() as usize;
        for _ in 0..n {
            s = step(&s, &u, &phi, &cfg, WheelTorqueModel::Effective, dt).unwrap();
        }
        let c = mrp_to_dcm(&s.sigma);
        let mut v: Vec<f64> = c.iter().copied().collect();
        v.extend(s.omega.iter());
        v.extend(s.wheel_speeds.iter().map(|w| w * 1e-3));
        DVector::from_vec(v)
    };
    let (a, b, c) = (run(0.2), run(0.1), run(0.05));
    ((&a - &b).norm() / (&b - &c).norm()).log2()
}

/// Open-loop ZOH run of `window` seconds sampled every `dt`. Returns the ICL
/// pair and the true health vector.
pub fn icl_window(seed: u64, dt: f64, window: f64) -> (IclPair<f64>, DVector<f64>) {
    let mut r = rng(seed);
    let cfg = rwa(axes4(), 5.7296e-5);
    let phi = DVector::from_fn(4, |_, _| r.gen_range(0.0..1.0));
    let health = HealthMatrix::new(phi.clone()).unwrap();
    let mut s = PlantState {
        sigma: mrp(&mut r, 0.3),
        omega: vec3(&mut r, 0.2),
        wheel_speeds: DVector::from_fn(4, |_, _| r.gen_range(-200.0..200.0)),
        time: 0.0,
    };
    // Smooth torque profile so that finer sampling is a genuine refinement.
    let amp = DVector::from_fn(4, |_, _| r.gen_range(-0.015..0.015));
    let freq = r.gen_range(0.5..2.0);
    let mut buf = IclBuffer::new();
    let n = (window / dt).round() as usize;
    for k in 0..=n {
        let u = &amp * (freq * s.time).cos();
        buf.push(IclSample {
            t: s.time,
            omega: s.omega,
            wheel_speeds: s.wheel_speeds.clone(),
            y: regressor(&u, &cfg.g),
        });
        if k < n {
            let t = s.time;
            s = step(&s, &u, &health, &cfg, WheelTorqueModel::Effective, dt).unwrap();
            s.time = t + dt;
        }
    }
    let pair = icl_accumulate(&buf, s.time, window, &cfg).unwrap();
    (pair, phi)
}

/// Minimum-norm solution through the normal equations of the full row rank
/// matrix `A`: `Aᵀ (A Aᵀ)⁻¹ b`.
pub fn normal_equations(a: &DMatrix<f64>, b: &Vector3<f64>) -> DVector<f64> {
    let aat = a * a.transpose();
    let inv = aat.try_inverse().expect("full row rank");
    a.transpose() * (inv * DVector::from_column_slice(b.as_slice()))
}

/// Largest deviation of the allocator from the normal-equation oracle over
/// random estimates, demands and 4/6 wheel geometries.
pub fn allocation_oracle_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let g = if seed.is_multiple_of(2) {
        axes4()
    } else {
        axes6()
    };
    let n = g.ncols();
    let theta = DVector::from_fn(n, |_, _| r.gen_range(0.1..1.0));
    let u_d = vec3(&mut r, 0.05);
    let alloc = allocate(
        &u_d,
        &ThetaEstimate {
            theta_hat: theta.clone(),
        },
        &g,
    );
    let a = DMatrix::from_fn(3, n, |i, j| g[(i, j)] * theta[j]);
    let oracle = normal_equations(&a, &u_d);
    (&alloc.u - &oracle).norm() / oracle.norm().max(1.0)
}

/// Inserts random pairs into a small stack and reports whether `λ_min`
/// ever decreased.
pub fn lambda_min_monotone(seed: u64) -> bool {
    let mut r = rng(seed);
    let mut stack = HistoryStack::new(4, 5, 1e-6);
    let mut prev = 0.0;
    for _ in 0..60 {
        let y = Matrix3xX::from_fn(4, |_, _| r.gen_range(-1.0..1.0) * r.gen_range(0.0..1.0));
        stack.insert(IclPair {
            script_y: y,
            script_u: Vector3::zeros(),
            delta_h: Vector3::zeros(),
            t_i: 0.0,
        });
        let lam = stack.lambda_min();
        if lam < prev {
            return false;
        }
        prev = lam;
    }
    true
}

/// One adaptation step from random data with aggressive gains; returns the
/// new estimate.
pub fn random_adaptation(seed: u64) -> DVector<f64> {
    let mut r = rng(seed);
    let cfg = rwa(axes4(), 5.7296e-5);
    let theta = ThetaEstimate {
        theta_hat: DVector::from_fn(4, |_, _| r.gen_range(0.0..=1.0)),
    };
    let gains = ControllerGains {
        k: Matrix3::identity() * 0.5,
        alpha: Matrix3::identity() * 0.03,
        beta: 5e-3,
        gamma: DMatrix::identity(4, 4) * r.gen_range(1.0..1e4),
        k1: DMatrix::identity(4, 4) * r.gen_range(0.0..100.0),
        lambda_bar: 1e-7,
        n_s: 4,
        delta_t: 1.0,
        theta_bounds: (0.0, 1.0),
    };
    let mut stack = HistoryStack::new(4, 4, 1e-7);
    for _ in 0..3 {
        stack.insert(IclPair {
            script_y: Matrix3xX::from_fn(4, |_, _| r.gen_range(-0.02..0.02)),
            script_u: vec3(&mut r, 0.01),
            delta_h: vec3(&mut r, 0.01),
            t_i: 0.0,
        });
    }
    let u = DVector::from_fn(4, |_, _| r.gen_range(-0.02..0.02));
    let y = regressor(&u, &cfg.g);
    let b = Matrix3::from_fn(|_, _| r.gen_range(-2.0..2.0));
    adaptation_step(
        &theta,
        &vec3(&mut r, 1.0),
        &b,
        &y,
        &stack,
        &gains,
        &cfg,
        0.1,
    )
    .theta_hat
}
