//! Deterministic simulation core for a remotely velocity-controlled robot arm.
//!
//! The controller and the plant exchange messages through two independent,
//! impairable channels (command and status direction). Every run is a pure
//! function of its configuration and seed, so scenarios are reproducible
//! bit for bit and can be compared against a zero-latency reference.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, CSV export and the
//! command-line front end live in the `netqoc` companion crate.

#![no_std]
// `!(a < b)` style checks are used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arm;
pub mod channel;
pub mod control;
pub mod error;
pub mod metrics;
pub mod runner;

pub use arm::{plant_step, ArmDescription, DhRow, JointState, Pose};
pub use channel::{
    freshest, Channel, ChannelConfig, ChannelKind, ChannelStats, DelayModel, DelayTrace,
    GoodBadParams, JitterParams, PushOutcome, StampedMessage, TraceParams,
};
pub use control::{
    plan_cartesian, plan_joint, ControlOutput, JointTrajectory, PidGains, PidState,
    TrajectorySample, VelocityCommand, VelocityController, WaypointList, WaypointSpace,
};
pub use error::{ConfigError, PlanError, PlantError, RunError, SweepError};
pub use metrics::{KpiReport, MetricsError, RunLog, RunMeta, TickRecord};
pub use runner::{
    assemble_sweep, run, run_sweep, run_with_plan, Divergence, HoldPolicy, RunOutcome,
    ScenarioConfig, Simulation, SweepPoint, SweepSpec, TrajectorySpec,
};

/// Simulation tick index. Tick `t` spans `[t·dt, (t+1)·dt)`.
pub type Tick = u64;
