use alloc::string::String;

use thiserror::Error;

use crate::metrics::MetricsError;
use crate::Tick;

/// Invalid or inconsistent configuration, detected before a run starts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{what}: expected {expected} values, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid value for {field}: {reason}")]
    InvalidValue { field: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("waypoint {waypoint} is unreachable: plan ends {error_m:.6} m from it")]
    Unreachable { waypoint: usize, error_m: f64 },
    #[error(
        "plan infeasible at sample {sample}, joint {joint}: step of {step:.6} rad exceeds \
         the velocity limit; try a lower speed"
    )]
    Infeasible { sample: usize, joint: usize, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("non-finite velocity command on joint {joint} at tick {tick}")]
    NonFiniteCommand { joint: usize, tick: Tick },
}

/// Errors that prevent a run from starting. Divergence is not an error: it
/// produces a truncated log flagged as diverged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("planning failed: {0}")]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("latency list is empty")]
    Empty,
    #[error("latency {0} is negative or not finite")]
    InvalidLatency(f64),
    #[error("latency list is not sorted ascending at position {0}")]
    Unsorted(usize),
    #[error("latency list has no 0 entry and no reference scenario was supplied")]
    NoReference,
    #[error("reference run failed: {0}")]
    Reference(RunError),
    #[error(transparent)]
    Run(#[from] RunError),
}
