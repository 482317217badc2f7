//! Quality-of-control KPIs computed from run logs.
//!
//! All cumulative KPIs use the L1 norm over joints and the rectangle rule in
//! time: `Σ_ticks Σ_joints |x_j| · dt`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::arm::ArmDescription;
use crate::channel::ChannelConfig;
use crate::control::PidGains;
use crate::error::ConfigError;
use crate::Tick;

/// Default joint-space divergence threshold (rad).
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1.0;

/// Everything logged at the start of one tick, before the plant advances.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub q_plan: Vec<f64>,
    pub q_exec: Vec<f64>,
    pub qd_cmd_sent: Vec<f64>,
    pub qd_cmd_applied: Vec<f64>,
    pub pid_error: Vec<f64>,
    pub ee_position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub gains: PidGains,
    pub cmd_channel: ChannelConfig,
    pub status_channel: ChannelConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub dt: f64,
    pub records: Vec<TickRecord>,
    pub meta: Option<RunMeta>,
}

impl RunLog {
    pub fn new(dt: f64) -> Self {
        RunLog {
            dt,
            records: Vec::new(),
            meta: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_joints(&self) -> usize {
        self.records.first().map_or(0, |r| r.q_plan.len())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("logs use different tick lengths ({0} s vs {1} s)")]
    DtMismatch(f64, f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A running sum and its final value.
#[derive(Debug, Clone, PartialEq)]
pub struct Cumulative {
    pub series: Vec<f64>,
    pub total: f64,
}

impl Cumulative {
    fn accumulate(dt: f64, per_tick: impl Iterator<Item = f64>) -> Self {
        let mut total = 0.0;
        let series = per_tick
            .map(|v| {
                total += v * dt;
                total
            })
            .collect();
        Cumulative { series, total }
    }
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn l1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn cum_pid_error(log: &RunLog) -> Cumulative {
    Cumulative::accumulate(log.dt, log.records.iter().map(|r| l1(&r.pid_error)))
}

pub fn cum_joint_dev(log: &RunLog) -> Cumulative {
    Cumulative::accumulate(
        log.dt,
        log.records.iter().map(|r| l1_diff(&r.q_exec, &r.q_plan)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDiff {
    pub cumulative: Cumulative,
    /// Number of ticks compared (the common prefix).
    pub compared: usize,
    /// Set when the logs differ in length.
    pub truncated: bool,
}

/// Cumulated difference of the sent velocity commands against a reference
/// run, over the common prefix of the two logs.
pub fn cum_vel_diff(log: &RunLog, reference: &RunLog) -> Result<VelocityDiff, MetricsError> {
    if log.dt != reference.dt {
        return Err(MetricsError::DtMismatch(log.dt, reference.dt));
    }
    if !log.is_empty() && !reference.is_empty() && log.n_joints() != reference.n_joints() {
        return Err(ConfigError::DimensionMismatch {
            what: "reference log joints",
            expected: log.n_joints(),
            found: reference.n_joints(),
        }
        .into());
    }
    let compared = log.len().min(reference.len());
    let cumulative = Cumulative::accumulate(
        log.dt,
        log.records
            .iter()
            .zip(&reference.records)
            .map(|(a, b)| l1_diff(&a.qd_cmd_sent, &b.qd_cmd_sent)),
    );
    Ok(VelocityDiff {
        cumulative,
        compared,
        truncated: log.len() != reference.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianDeviation {
    pub mean: f64,
    pub max: f64,
}

/// Per-tick distance between the logged end-effector position and the
/// forward kinematics of the plan at the same tick.
pub fn cartesian_dev(arm: &ArmDescription, log: &RunLog) -> Result<CartesianDeviation, ConfigError> {
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for r in &log.records {
        let plan = arm.forward_kinematics(&r.q_plan)?.position;
        let (dx, dy, dz) = (
            r.ee_position[0] - plan.x,
            r.ee_position[1] - plan.y,
            r.ee_position[2] - plan.z,
        );
        let d = libm::sqrt(dx * dx + dy * dy + dz * dz);
        sum += d;
        max = max.max(d);
    }
    let mean = if log.is_empty() {
        0.0
    } else {
        sum / log.len() as f64
    };
    Ok(CartesianDeviation { mean, max })
}

/// A record diverges when a joint strays more than `threshold` from the
/// plan or any logged value is non-finite.
pub fn divergent_record(record: &TickRecord, threshold: f64) -> bool {
    let non_finite = record
        .q_exec
        .iter()
        .chain(&record.q_plan)
        .chain(&record.qd_cmd_sent)
        .chain(&record.qd_cmd_applied)
        .chain(&record.pid_error)
        .chain(&record.ee_position)
        .any(|v| !v.is_finite());
    non_finite
        || record
            .q_exec
            .iter()
            .zip(&record.q_plan)
            .any(|(e, p)| (e - p).abs() > threshold)
}

/// `Some(tick)` of the first record where any joint strays more than
/// `threshold` rad from the plan, or any value is non-finite.
pub fn detect_divergence(log: &RunLog, threshold: f64) -> Option<Tick> {
    log.records
        .iter()
        .position(|r| divergent_record(r, threshold))
        .map(|i| i as Tick)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub cum_pid_error: Cumulative,
    pub cum_joint_dev: Cumulative,
    /// Present when a reference run was supplied.
    pub cum_vel_diff: Option<VelocityDiff>,
    pub cartesian: CartesianDeviation,
    pub diverged_at: Option<Tick>,
}

impl KpiReport {
    pub fn compute(
        arm: &ArmDescription,
        log: &RunLog,
        reference: Option<&RunLog>,
        threshold: f64,
    ) -> Result<Self, MetricsError> {
        Ok(KpiReport {
            cum_pid_error: cum_pid_error(log),
            cum_joint_dev: cum_joint_dev(log),
            cum_vel_diff: reference.map(|r| cum_vel_diff(log, r)).transpose()?,
            cartesian: cartesian_dev(arm, log)?,
            diverged_at: detect_divergence(log, threshold),
        })
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn vel_diff_total(&self) -> Option<f64> {
        self.cum_vel_diff.as_ref().map(|v| v.cumulative.total)
    }
}
