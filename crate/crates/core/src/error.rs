use thiserror::Error;

use crate::waveform::Violation;

/// Errors raised by the simulation primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TmaError {
    #[error("invalid period {0} s: must be finite and positive")]
    InvalidPeriod(f64),
    #[error("invalid duty: on-duration fraction {fraction} outside (0, {max}]")]
    InvalidDuty { fraction: f64, max: f64 },
    #[error("invalid angle {0} deg: must lie strictly inside (-90, 90)")]
    InvalidAngle(f64),
    #[error("invalid clock period {clock} s for modulation period {period} s")]
    InvalidClock { clock: f64, period: f64 },
    #[error("invalid harmonic range [{h_min}, {h_max}]")]
    InvalidRange { h_min: i64, h_max: i64 },
    #[error("angle grid is empty")]
    EmptyGrid,
    #[error("invalid angle grid: {0}")]
    InvalidGrid(String),
    #[error("harmonic order {0} not present in spectrum")]
    MissingOrder(i64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid schedule: {}", join_violations(.0))]
    InvalidSchedule(Vec<Violation>),
    #[error("invalid array configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid phase error model: {0}")]
    InvalidPhaseErrors(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, TmaError>;
