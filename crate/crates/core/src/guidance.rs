//! Attitude references: inertial hold, nadir pointing on a circular orbit,
//! and a piecewise schedule switching between them.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::attitude::{dcm_to_mrp, Mrp};
use crate::scalar::Real;

pub const EARTH_MU: f64 = 3.986_004_418e14;
pub const EARTH_RADIUS: f64 = 6_378_137.0;

/// Circular two-body orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitConfig<T: Real> {
    /// Orbit radius, m.
    pub radius: T,
    /// Gravitational parameter, m³/s².
    pub mu: T,
    pub raan: T,
    pub inclination: T,
    /// Argument of latitude at t = 0, rad.
    pub arg_latitude_epoch: T,
}

impl<T: Real> OrbitConfig<T> {
    /// 500 km altitude equatorial orbit.
    pub fn leo_500km() -> Self {
        OrbitConfig {
            radius: T::lit(EARTH_RADIUS + 500.0e3),
            mu: T::lit(EARTH_MU),
            raan: T::zero(),
            inclination: T::zero(),
            arg_latitude_epoch: T::zero(),
        }
    }

    /// Mean motion `n = sqrt(μ / r³)`, rad/s.
    pub fn mean_motion(&self) -> T {
        (self.mu / (self.radius * self.radius * self.radius)).sqrt()
    }

    /// Maps perifocal-like orbit-plane coordinates into the inertial frame.
    fn plane_to_inertial(&self) -> Matrix3<T> {
        let (si, ci) = self.inclination.sin_cos();
        let (so, co) = self.raan.sin_cos();
        let z = T::zero();
        let one = T::one();
        let r3 = Matrix3::new(co, -so, z, so, co, z, z, z, one);
        let r1 = Matrix3::new(one, z, z, z, ci, -si, z, si, ci);
        r3 * r1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    /// Body frame aligned with the inertial frame.
    InertialHold,
    /// Body frame aligned with the orbital (nadir) frame.
    NadirPointing,
}

/// Ordered `(switch_time, mode)` pairs; the first entry starts at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceSchedule<T: Real> {
    pub segments: Vec<(T, GuidanceMode)>,
}

impl<T: Real> GuidanceSchedule<T> {
    pub fn mode_at(&self, t: T) -> GuidanceMode {
        self.segments
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map(|&(_, m)| m)
            .unwrap_or(GuidanceMode::InertialHold)
    }

    /// Times (after 0) at which the reference jumps.
    pub fn switch_times(&self) -> impl Iterator<Item = T> + '_ {
        self.segments.iter().skip(1).map(|&(t, _)| t)
    }

    pub fn last_switch(&self) -> T {
        self.segments.last().map(|&(t, _)| t).unwrap_or(T::zero())
    }
}

/// Inertial hold from 0 s, nadir from 720 s, inertial hold from 1440 s and
/// nadir again from 2000 s.
pub fn mission_schedule<T: Real>() -> GuidanceSchedule<T> {
    use GuidanceMode::*;
    GuidanceSchedule {
        segments: vec![
            (T::zero(), InertialHold),
            (T::lit(720.0), NadirPointing),
            (T::lit(1440.0), InertialHold),
            (T::lit(2000.0), NadirPointing),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample<T: Real> {
    pub sigma_d: Mrp<T>,
    /// Desired angular velocity, desired-frame coordinates.
    pub omega_d: Vector3<T>,
    pub omega_d_dot: Vector3<T>,
    pub time: T,
}

/// Inertial → orbital DCM. Rows: along-track `ô₁ = ô₂ × ô₃`, orbit normal
/// `ô₂`, zenith `ô₃`.
pub fn orbital_frame<T: Real>(t: T, orbit: &OrbitConfig<T>) -> Matrix3<T> {
    let u = orbit.arg_latitude_epoch + orbit.mean_motion() * t;
    let (su, cu) = u.sin_cos();
    let p = orbit.plane_to_inertial();
    let o3 = p * Vector3::new(cu, su, T::zero());
    let o2 = p * Vector3::z();
    let o1 = o2.cross(&o3);
    Matrix3::from_rows(&[o1.transpose(), o2.transpose(), o3.transpose()])
}

pub fn reference<T: Real>(
    t: T,
    schedule: &GuidanceSchedule<T>,
    orbit: &OrbitConfig<T>,
) -> ReferenceSample<T> {
    match schedule.mode_at(t) {
        GuidanceMode::InertialHold => ReferenceSample {
            sigma_d: Mrp::zero(),
            omega_d: Vector3::zeros(),
            omega_d_dot: Vector3::zeros(),
            time: t,
        },
        GuidanceMode::NadirPointing => {
            let c = orbital_frame(t, orbit);
            ReferenceSample {
                // Built from an orthonormal triad, so always a rotation.
                sigma_d: dcm_to_mrp(&c).expect("orbital frame is a rotation"),
                // The orbital frame turns about the orbit normal ô₂.
                omega_d: Vector3::new(T::zero(), orbit.mean_motion(), T::zero()),
                omega_d_dot: Vector3::zeros(),
                time: t,
            }
        }
    }
}
