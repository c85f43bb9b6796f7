//! Scenario configuration, closed-loop runs, telemetry and run summaries.

pub mod compare;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod presets;
pub mod telemetry;

pub use compare::{compare_runs, CompareError, CompareOptions, ComparisonReport};
pub use config::{load_config, parse_config, ConfigError, ScenarioConfig};
pub use engine::{run, run_as, RunOutput, SimError, Simulation};
pub use metrics::{ExpFit, RunMetrics, SaturationCounts};
pub use telemetry::{read_telemetry, write_telemetry, TelemetryError, TelemetryRecord};
