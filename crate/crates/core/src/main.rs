use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rwa_icl::harness::{
    self, compare_runs, load_config, presets, read_telemetry, write_telemetry, CompareOptions,
    ConfigError, RunMetrics, SimError,
};

/// Exit status categories.
mod exit {
    pub const VALIDATION: u8 = 3;
    pub const DIVERGENCE: u8 = 4;
    pub const IO: u8 = 5;
    pub const COMPARE: u8 = 6;
}

#[derive(Parser)]
#[command(
    name = "rwa-icl",
    version,
    about = "Adaptive attitude control with reaction wheel health estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its telemetry as CSV.
    Run {
        /// TOML scenario file or preset name.
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the simulated duration, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Override the plant step, s.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Compare allocated wheel torques of two telemetry files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// 1-based wheel indices.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        wheels: Vec<usize>,
        /// Average only after the excitation threshold was reached.
        #[arg(long)]
        after_fe: bool,
        /// Extra delay before the averaging window, s.
        #[arg(long, default_value_t = 200.0)]
        settle: f64,
    },
    /// Check a scenario without running it.
    Validate { config: String },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset as TOML.
    Show {
        name: String,
    },
}

fn config_exit(e: &ConfigError) -> ExitCode {
    eprintln!("error [{}]: {e}", e.code());
    match e {
        ConfigError::Io { .. } => ExitCode::from(exit::IO),
        _ => ExitCode::from(exit::VALIDATION),
    }
}

fn print_summary(m: &RunMetrics) {
    println!("control steps        {}", m.steps);
    if let Some(e) = m.final_sigma_e_norm {
        println!("final |sigma_e|      {e:.3e}");
    }
    match m.fe_time {
        Some(t) => println!("excitation reached   {t:.1} s"),
        None => println!("excitation reached   never"),
    }
    let th: Vec<String> = m
        .terminal_theta_hat
        .iter()
        .map(|x| format!("{x:.4}"))
        .collect();
    println!("theta_hat            [{}]", th.join(", "));
    println!("max |Omega|/Omega_max {:.3}", m.max_wheel_speed_fraction);
    println!("torque-limited steps {:?}", m.saturation.torque);
    println!("speed-limited steps  {:?}", m.saturation.speed);
    println!("rank loss events     {}", m.rank_loss_events);
}

fn run(config: &str, out: Option<PathBuf>, duration: Option<f64>, dt: Option<f64>) -> ExitCode {
    let mut cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return config_exit(&e),
    };
    if let Some(d) = duration {
        cfg.duration = d;
    }
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    let path = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
    let n = cfg.n_wheels();
    let (output, status) = match harness::run(&cfg) {
        Ok(o) => (o, ExitCode::SUCCESS),
        Err(SimError::Config(e)) => return config_exit(&e),
        Err(SimError::Diverged { source, partial }) => {
            eprintln!("error [divergence]: {source}");
            (*partial, ExitCode::from(exit::DIVERGENCE))
        }
    };
    if let Err(e) = write_telemetry(&output.telemetry, n, &path) {
        eprintln!("error [io]: {e}");
        return ExitCode::from(exit::IO);
    }
    print_summary(&output.metrics);
    println!("telemetry            {}", path.display());
    status
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            duration,
            dt,
        } => run(&config, out, duration, dt),
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in presets::names() {
                    println!("{name:<14} {}", presets::description(name).unwrap_or(""));
                }
                ExitCode::SUCCESS
            }
            PresetAction::Show { name } => match presets::preset(&name) {
                Some(c) => {
                    print!("{}", c.to_toml());
                    ExitCode::SUCCESS
                }
                None => config_exit(&ConfigError::UnknownPreset(name)),
            },
        },
        Command::Compare {
            a,
            b,
            wheels,
            after_fe,
            settle,
        } => {
            let read = |p: &PathBuf| {
                read_telemetry::<f64>(p).map_err(|e| {
                    eprintln!("error [io]: {e}");
                    ExitCode::from(exit::IO)
                })
            };
            let (ra, rb) = match (read(&a), read(&b)) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(code), _) | (_, Err(code)) => return code,
            };
            let opts = CompareOptions {
                wheels,
                after_fe,
                settle,
            };
            match compare_runs(&ra, &rb, &opts) {
                Ok(rep) => {
                    println!("A = {}\nB = {}", a.display(), b.display());
                    println!("{rep}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error [compare]: {e}");
                    ExitCode::from(exit::COMPARE)
                }
            }
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(c) => {
                println!(
                    "ok: {} ({} wheels, dt {} s, duration {} s)",
                    c.name,
                    c.n_wheels(),
                    c.dt,
                    c.duration
                );
                ExitCode::SUCCESS
            }
            Err(e) => config_exit(&e),
        },
    }
}
