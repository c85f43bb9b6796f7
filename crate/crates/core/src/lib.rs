//! Spacecraft attitude tracking with a redundant reaction wheel array and
//! online wheel-health estimation.
//!
//! The adaptive controller tracks a guidance schedule while estimating a
//! per-wheel effectiveness factor in `[0, 1]`. Estimation combines a
//! tracking-error gradient with integral concurrent learning over a history
//! stack of windowed data; once the stack is rich enough the estimates
//! converge and the allocator stops commanding failed wheels.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`.

// `!(x <= y)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attitude;
pub mod controller;
pub mod guidance;
pub mod harness;
pub mod linalg;
pub mod plant;
pub mod scalar;

pub use scalar::Real;

pub type Mrp = attitude::Mrp<f64>;
pub type Mrp32 = attitude::Mrp<f32>;
pub type PlantState = plant::PlantState<f64>;
pub type RwaConfig = plant::RwaConfig<f64>;
pub type HealthMatrix = plant::HealthMatrix<f64>;
pub type OrbitConfig = guidance::OrbitConfig<f64>;
pub type GuidanceSchedule = guidance::GuidanceSchedule<f64>;
pub type ReferenceSample = guidance::ReferenceSample<f64>;
pub type ControllerGains = controller::ControllerGains<f64>;
pub type AdaptiveController = controller::AdaptiveController<f64>;
pub type HistoryStack = controller::HistoryStack<f64>;
pub type IclPair = controller::IclPair<f64>;
pub type TelemetryRecord = harness::TelemetryRecord<f64>;
