//! Built-in scenarios: the four reference cases and the ICL-off twin of
//! case 3 used for the torque comparison.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3xX, Vector3};

use super::config::{InitialConditions, ScenarioConfig};
use crate::attitude::Mrp;
use crate::controller::ControllerGains;
use crate::guidance::{mission_schedule, OrbitConfig};
use crate::plant::{HealthMatrix, RwaConfig, WheelTorqueModel};

pub const SATELLITE_MASS: f64 = 25.0;
pub const BODY_INERTIA: [f64; 3] = [0.4333, 0.7042, 0.7042];
/// Wheel inertia as tabulated. Almost certainly meant as 5.7296e-5; the
/// closed loop is insensitive to it because only `J_RW Ω` enters.
pub const WHEEL_INERTIA: f64 = 5.7296e5;
pub const MAX_WHEEL_TORQUE: f64 = 20.0e-3;
pub const MAX_WHEEL_SPEED: f64 = 1.0472e3;

#[rustfmt::skip]
pub const AXES_4: [[f64; 4]; 3] = [
    [0.5774, -0.5774,  0.5774, -0.5774],
    [0.5774,  0.5774, -0.5774, -0.5774],
    [0.5774,  0.5774,  0.5774,  0.5774],
];

#[rustfmt::skip]
pub const AXES_6: [[f64; 6]; 3] = [
    [0.5,   0.5,    0.5,   0.5,    0.5,    0.5  ],
    [0.0,   0.75,   0.75,  0.0,   -0.75,  -0.75 ],
    [0.866, 0.433, -0.433, -0.866, -0.433, 0.433],
];

/// History stack capacity used by every preset.
pub const STACK_SIZE: usize = 20;
/// ICL integration window, s.
pub const ICL_WINDOW: f64 = 1.0;
pub const DT: f64 = 0.1;
pub const DURATION: f64 = 4000.0;

const NAMES: [&str; 5] = ["case1", "case2", "case3", "case4", "case3-no-icl"];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

pub fn description(name: &str) -> Option<&'static str> {
    Some(match name {
        "case1" => "4 wheels, wheel 3 failed, ICL on",
        "case2" => "4 wheels, wheel 3 failed, ICL off",
        "case3" => "6 wheels, wheels 1-2 failed, ICL on",
        "case4" => "6 wheels, wheel 1 failed, wheel 2 at 30%, ICL on",
        "case3-no-icl" => "case 3 with ICL off (torque comparison twin)",
        _ => return None,
    })
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "case1" => base(
            "case1",
            &AXES_4,
            &[1.0, 1.0, 0.0, 1.0],
            0.5,
            100.0,
            10.0,
            1e-7,
        ),
        // The ICL term is off; the threshold only drives the FE monitor.
        "case2" => base(
            "case2",
            &AXES_4,
            &[1.0, 1.0, 0.0, 1.0],
            0.5,
            100.0,
            0.0,
            1e-7,
        ),
        "case3" => base(
            "case3",
            &AXES_6,
            &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
            0.05,
            300.0,
            10.0,
            8e-9,
        ),
        "case4" => base(
            "case4",
            &AXES_6,
            &[0.0, 0.3, 1.0, 1.0, 1.0, 1.0],
            0.05,
            300.0,
            10.0,
            8e-9,
        ),
        "case3-no-icl" => base(
            "case3-no-icl",
            &AXES_6,
            &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
            0.05,
            300.0,
            0.0,
            8e-9,
        ),
        _ => return None,
    })
}

fn base<const N: usize>(
    name: &str,
    axes: &[[f64; N]; 3],
    health: &[f64; N],
    k: f64,
    gamma: f64,
    k1: f64,
    lambda_bar: f64,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        rwa: RwaConfig {
            g: Matrix3xX::from_fn(N, |r, c| axes[r][c]),
            j_rw: WHEEL_INERTIA,
            max_torque: MAX_WHEEL_TORQUE,
            max_speed: MAX_WHEEL_SPEED,
            j_body: Matrix3::from_diagonal(&Vector3::from(BODY_INERTIA)),
        },
        mass: Some(SATELLITE_MASS),
        phi_true: HealthMatrix {
            phi: DVector::from_column_slice(health),
        },
        gains: ControllerGains {
            k: Matrix3::identity() * k,
            alpha: Matrix3::identity() * 3e-2,
            beta: 5e-3,
            gamma: DMatrix::identity(N, N) * gamma,
            k1: DMatrix::identity(N, N) * k1,
            lambda_bar,
            n_s: STACK_SIZE,
            delta_t: ICL_WINDOW,
            theta_bounds: (0.0, 1.0),
        },
        orbit: OrbitConfig::leo_500km(),
        schedule: mission_schedule(),
        dt: DT,
        duration: DURATION,
        control_decimation: 1,
        wheel_torque_model: WheelTorqueModel::Effective,
        initial: InitialConditions {
            sigma: Mrp::zero(),
            omega: Vector3::zeros(),
            wheel_speeds: DVector::zeros(N),
            theta_hat: DVector::from_element(N, 1.0),
        },
        output: None,
    }
}
