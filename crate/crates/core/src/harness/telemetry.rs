//! Per-step telemetry records and their CSV form.
//!
//! Floats are written with the shortest decimal representation that parses
//! back to the same value, so a written file re-reads bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector3};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord<T: Real> {
    pub t: T,
    pub sigma_e: Vector3<T>,
    /// Filtered tracking error.
    pub r: Vector3<T>,
    pub omega: Vector3<T>,
    pub wheel_speeds: DVector<T>,
    /// Allocated torque before the torque limit.
    pub u_commanded: DVector<T>,
    /// Torque actually delivered to the body, `Φ u_sat`.
    pub u_effective: DVector<T>,
    pub theta_hat: DVector<T>,
    pub lambda_min: T,
    pub fe_flag: bool,
    pub lyapunov_v: T,
}

/// Shortest round-trip decimal; exponent form for very small or large
/// magnitudes.
fn num<T: Real>(x: T) -> String {
    let a = x.to_f64().abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

impl<T: Real> TelemetryRecord<T> {
    pub fn n_wheels(&self) -> usize {
        self.theta_hat.len()
    }

    fn fields(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(13 + 4 * self.n_wheels());
        out.push(num(self.t));
        for v in [&self.sigma_e, &self.r, &self.omega] {
            out.extend(v.iter().map(|&x| num(x)));
        }
        for v in [
            &self.wheel_speeds,
            &self.u_commanded,
            &self.u_effective,
            &self.theta_hat,
        ] {
            out.extend(v.iter().map(|&x| num(x)));
        }
        out.push(num(self.lambda_min));
        out.push(if self.fe_flag { "1" } else { "0" }.to_string());
        out.push(num(self.lyapunov_v));
        out
    }
}

/// Column names for an `n`-wheel array.
pub fn header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for name in ["sigma_e", "r", "omega"] {
        h.extend((1..=3).map(|i| format!("{name}_{i}")));
    }
    for name in ["wheel_speeds", "u_commanded", "u_effective", "theta_hat"] {
        h.extend((1..=n).map(|i| format!("{name}_{i}")));
    }
    h.extend(["lambda_min", "fe_flag", "lyapunov_v"].map(String::from));
    h
}

pub fn write_telemetry<T: Real>(
    records: &[TelemetryRecord<T>],
    n_wheels: usize,
    path: &Path,
) -> Result<(), TelemetryError> {
    let io = |source| TelemetryError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_telemetry_to(records, n_wheels, BufWriter::new(file)).map_err(|e| match e {
        TelemetryError::Csv { source, .. } => TelemetryError::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn write_telemetry_to<T: Real, W: Write>(
    records: &[TelemetryRecord<T>],
    n_wheels: usize,
    writer: W,
) -> Result<(), TelemetryError> {
    let csv_err = |source| TelemetryError::Csv {
        path: PathBuf::new(),
        source,
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(n_wheels)).map_err(csv_err)?;
    for rec in records {
        w.write_record(rec.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(|source| TelemetryError::Io {
        path: PathBuf::new(),
        source,
    })
}

pub fn read_telemetry<T: Real>(path: &Path) -> Result<Vec<TelemetryRecord<T>>, TelemetryError> {
    let file = File::open(path).map_err(|source| TelemetryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_telemetry_from(BufReader::new(file)).map_err(|e| match e {
        TelemetryError::Csv { source, .. } => TelemetryError::Csv {
            path: path.to_path_buf(),
            source,
        },
        TelemetryError::Format { reason, .. } => TelemetryError::Format {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

pub fn read_telemetry_from<T: Real, R: Read>(
    reader: R,
) -> Result<Vec<TelemetryRecord<T>>, TelemetryError> {
    let fmt = |reason: String| TelemetryError::Format {
        path: PathBuf::new(),
        reason,
    };
    let mut rd = csv::Reader::from_reader(reader);
    let head: Vec<String> = rd
        .headers()
        .map_err(|source| TelemetryError::Csv {
            path: PathBuf::new(),
            source,
        })?
        .iter()
        .map(String::from)
        .collect();
    if head.len() < 13 || !(head.len() - 13).is_multiple_of(4) {
        return Err(fmt(format!("unexpected column count {}", head.len())));
    }
    let n = (head.len() - 13) / 4;
    if head != header(n) {
        return Err(fmt("header does not match the telemetry schema".into()));
    }

    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row.map_err(|source| TelemetryError::Csv {
            path: PathBuf::new(),
            source,
        })?;
        let parse = |i: usize| -> Result<T, TelemetryError> {
            let s = row.get(i).unwrap_or("");
            s.parse::<T>().map_err(|_| {
                fmt(format!(
                    "row {}: column `{}` is not a number: {s:?}",
                    line + 2,
                    head[i]
                ))
            })
        };
        let vec3 = |at: usize| -> Result<Vector3<T>, TelemetryError> {
            Ok(Vector3::new(parse(at)?, parse(at + 1)?, parse(at + 2)?))
        };
        let vecn = |at: usize| -> Result<DVector<T>, TelemetryError> {
            (at..at + n)
                .map(parse)
                .collect::<Result<Vec<_>, _>>()
                .map(DVector::from_vec)
        };
        let flag = match row.get(11 + 4 * n) {
            Some("1") => true,
            Some("0") => false,
            other => return Err(fmt(format!("row {}: bad fe_flag {other:?}", line + 2))),
        };
        out.push(TelemetryRecord {
            t: parse(0)?,
            sigma_e: vec3(1)?,
            r: vec3(4)?,
            omega: vec3(7)?,
            wheel_speeds: vecn(10)?,
            u_commanded: vecn(10 + n)?,
            u_effective: vecn(10 + 2 * n)?,
            theta_hat: vecn(10 + 3 * n)?,
            lambda_min: parse(10 + 4 * n)?,
            fe_flag: flag,
            lyapunov_v: parse(12 + 4 * n)?,
        });
    }
    Ok(out)
}
