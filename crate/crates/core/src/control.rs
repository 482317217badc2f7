//! Trajectory planning (Cartesian-straight and joint-straight) and the
//! per-joint PID velocity controller that tracks a timed plan.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::arm::{ArmDescription, JointState};
use crate::error::{ConfigError, PlanError};
use crate::Tick;

/// Relative slack on the per-step feasibility check, absorbs rounding in
/// `q + qd·dt`.
const FEASIBILITY_SLACK: f64 = 1e-9;

/// Maximum distance between the integrated plan and a Cartesian waypoint.
pub const REACH_TOLERANCE_M: f64 = 1e-3;

/// Default damping for the damped least-squares planner.
pub const DEFAULT_DAMPING: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub q_ref: Vec<f64>,
    pub qd_ref: Vec<f64>,
}

/// Planned joint reference sampled every `dt` seconds. The last sample
/// always carries zero velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    dt: f64,
    samples: Vec<TrajectorySample>,
}

impl JointTrajectory {
    pub fn new(dt: f64, samples: Vec<TrajectorySample>) -> Result<Self, ConfigError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::invalid("dt", "must be positive and finite"));
        }
        let Some(first) = samples.first() else {
            return Err(ConfigError::invalid("trajectory", "needs at least one sample"));
        };
        let n = first.q_ref.len();
        for s in &samples {
            if s.q_ref.len() != n || s.qd_ref.len() != n {
                return Err(ConfigError::DimensionMismatch {
                    what: "trajectory sample",
                    expected: n,
                    found: s.q_ref.len().min(s.qd_ref.len()),
                });
            }
        }
        Ok(JointTrajectory { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_joints(&self) -> usize {
        self.samples[0].q_ref.len()
    }

    pub fn total_duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("non-empty")
    }

    /// Reference position at `tick`, holding the final sample past the end.
    pub fn q_ref_at(&self, tick: Tick) -> &[f64] {
        let idx = (tick as usize).min(self.samples.len() - 1);
        &self.samples[idx].q_ref
    }

    /// Consecutive samples must not move a joint faster than its limit.
    pub fn check_feasible(&self, vel_limit: &[f64]) -> Result<(), PlanError> {
        for (k, pair) in self.samples.windows(2).enumerate() {
            for (j, (a, b)) in pair[0].q_ref.iter().zip(&pair[1].q_ref).enumerate() {
                let step = (b - a).abs();
                let allowed = vel_limit[j] * self.dt * (1.0 + FEASIBILITY_SLACK);
                if !(step <= allowed) {
                    return Err(PlanError::Infeasible {
                        sample: k + 1,
                        joint: j,
                        step,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaypointSpace {
    Cartesian,
    Joint,
}

/// Ordered targets visited one by one from the start configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointList {
    space: WaypointSpace,
    points: Vec<Vec<f64>>,
}

impl WaypointList {
    pub fn new(space: WaypointSpace, points: Vec<Vec<f64>>) -> Result<Self, ConfigError> {
        if points.len() < 2 {
            return Err(ConfigError::invalid(
                "trajectory.points",
                "at least two waypoints are required",
            ));
        }
        let dim = points[0].len();
        if space == WaypointSpace::Cartesian && dim != 3 {
            return Err(ConfigError::DimensionMismatch {
                what: "cartesian waypoint",
                expected: 3,
                found: dim,
            });
        }
        for p in &points {
            if p.len() != dim {
                return Err(ConfigError::DimensionMismatch {
                    what: "waypoint",
                    expected: dim,
                    found: p.len(),
                });
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(ConfigError::invalid("trajectory.points", "values must be finite"));
            }
        }
        Ok(WaypointList { space, points })
    }

    pub fn space(&self) -> WaypointSpace {
        self.space
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

fn segment_steps(length: f64, speed: f64, dt: f64) -> usize {
    let exact = length / (speed * dt);
    // 0.2 / (0.1 · 0.01) is 200.00000000000003 in floating point
    libm::ceil(exact - 1e-9).max(1.0) as usize
}

fn check_speed_dt(speed: f64, dt: f64) -> Result<(), ConfigError> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(ConfigError::invalid("trajectory.speed", "must be positive"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ConfigError::invalid("dt", "must be positive"));
    }
    Ok(())
}

/// Straight position-space segments at constant speed, converted to joint
/// space by resolved-rate integration with damped least squares.
///
/// Each step asks for the Cartesian displacement from the current end
/// effector position to the next point on the line, so the integration does
/// not drift off the segment. Orientation is left free.
pub fn plan_cartesian(
    arm: &ArmDescription,
    q_start: &[f64],
    waypoints: &WaypointList,
    speed: f64,
    dt: f64,
    damping: f64,
) -> Result<JointTrajectory, PlanError> {
    if waypoints.space() != WaypointSpace::Cartesian {
        return Err(ConfigError::invalid("trajectory.space", "expected cartesian waypoints").into());
    }
    check_speed_dt(speed, dt)?;
    if !(damping >= 0.0 && damping.is_finite()) {
        return Err(ConfigError::invalid("trajectory.damping", "must be non-negative").into());
    }
    let n = arm.n_joints();
    let mut q = q_start.to_vec();
    let mut line_start = arm.forward_kinematics(&q)?.position;
    let mut samples = Vec::new();
    let damping_sq = DMatrix::<f64>::identity(n, n) * (damping * damping);

    for (idx, point) in waypoints.points().iter().enumerate() {
        let target = Vector3::new(point[0], point[1], point[2]);
        let delta = target - line_start;
        let length = delta.norm();
        if length > 1e-12 {
            let steps = segment_steps(length, speed, dt);
            for i in 1..=steps {
                let goal = line_start + delta * (i as f64 / steps as f64);
                let here = arm.forward_kinematics(&q)?.position;
                let jac = arm.jacobian(&q)?;
                let lin = jac.rows(0, 3).into_owned();
                let dp = DVector::from_column_slice((goal - here).as_slice());
                let lhs = lin.transpose() * &lin + &damping_sq;
                let rhs = lin.transpose() * dp;
                let dq = lhs
                    .lu()
                    .solve(&rhs)
                    .ok_or(PlanError::Unreachable {
                        waypoint: idx,
                        error_m: (target - here).norm(),
                    })?;
                let qd: Vec<f64> = dq.iter().map(|v| v / dt).collect();
                let next: Vec<f64> = q.iter().zip(&qd).map(|(qi, vi)| qi + vi * dt).collect();
                if !next.iter().all(|v| v.is_finite()) {
                    return Err(PlanError::Unreachable {
                        waypoint: idx,
                        error_m: f64::INFINITY,
                    });
                }
                samples.push(TrajectorySample {
                    q_ref: core::mem::replace(&mut q, next),
                    qd_ref: qd,
                });
            }
        }
        let reached = arm.forward_kinematics(&q)?.position;
        let error_m = (reached - target).norm();
        if !(error_m <= REACH_TOLERANCE_M) {
            return Err(PlanError::Unreachable {
                waypoint: idx,
                error_m,
            });
        }
        line_start = target;
    }
    samples.push(TrajectorySample {
        q_ref: q,
        qd_ref: alloc::vec![0.0; n],
    });
    let traj = JointTrajectory::new(dt, samples)?;
    traj.check_feasible(arm.vel_limit())?;
    Ok(traj)
}

/// Linear joint-space interpolation at constant L∞ joint speed.
pub fn plan_joint(
    q_start: &[f64],
    waypoints: &WaypointList,
    speed: f64,
    dt: f64,
    vel_limit: &[f64],
) -> Result<JointTrajectory, PlanError> {
    if waypoints.space() != WaypointSpace::Joint {
        return Err(ConfigError::invalid("trajectory.space", "expected joint waypoints").into());
    }
    check_speed_dt(speed, dt)?;
    let n = q_start.len();
    for (what, len) in [
        ("joint waypoint", waypoints.points()[0].len()),
        ("vel_limit", vel_limit.len()),
    ] {
        if len != n {
            return Err(ConfigError::DimensionMismatch {
                what,
                expected: n,
                found: len,
            }
            .into());
        }
    }
    let mut from = q_start.to_vec();
    let mut samples = Vec::new();
    for point in waypoints.points() {
        let delta: Vec<f64> = point.iter().zip(&from).map(|(b, a)| b - a).collect();
        let length = delta.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        if length > 1e-12 {
            let steps = segment_steps(length, speed, dt);
            let duration = steps as f64 * dt;
            let slope: Vec<f64> = delta.iter().map(|d| d / duration).collect();
            for i in 0..steps {
                let frac = i as f64 / steps as f64;
                samples.push(TrajectorySample {
                    q_ref: from.iter().zip(&delta).map(|(a, d)| a + d * frac).collect(),
                    qd_ref: slope.clone(),
                });
            }
        }
        from = point.clone();
    }
    samples.push(TrajectorySample {
        q_ref: from,
        qd_ref: alloc::vec![0.0; n],
    });
    let traj = JointTrajectory::new(dt, samples)?;
    traj.check_feasible(vel_limit)?;
    Ok(traj)
}

/// Per-joint PID gains acting on position error (rad) and producing rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct PidGains {
    pub kp: Vec<f64>,
    pub ki: Vec<f64>,
    pub kd: Vec<f64>,
    pub i_clamp: Vec<f64>,
}

impl PidGains {
    pub fn uniform(n: usize, kp: f64, ki: f64, kd: f64, i_clamp: f64) -> Self {
        PidGains {
            kp: alloc::vec![kp; n],
            ki: alloc::vec![ki; n],
            kd: alloc::vec![kd; n],
            i_clamp: alloc::vec![i_clamp; n],
        }
    }

    /// kp = 10, ki = 0.5, kd = 0.1, i_clamp = 1.0 on every joint.
    pub fn default_for(n: usize) -> Self {
        PidGains::uniform(n, 10.0, 0.5, 0.1, 1.0)
    }

    pub fn validate(&self, n: usize) -> Result<(), ConfigError> {
        for (what, v) in [
            ("gains.kp", &self.kp),
            ("gains.ki", &self.ki),
            ("gains.kd", &self.kd),
            ("gains.i_clamp", &self.i_clamp),
        ] {
            if v.len() != n {
                return Err(ConfigError::DimensionMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
            if !v.iter().all(|g| *g >= 0.0 && g.is_finite()) {
                return Err(ConfigError::invalid(what, "gains must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Joint velocity setpoint streamed from the controller to the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityCommand {
    pub qd_cmd: Vec<f64>,
    pub seq: u64,
    pub send_tick: Tick,
}

impl VelocityCommand {
    /// The command held before anything has been received.
    pub fn zero(n: usize) -> Self {
        VelocityCommand {
            qd_cmd: alloc::vec![0.0; n],
            seq: 0,
            send_tick: 0,
        }
    }
}

/// Integrator, previous error and last emitted sequence number.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub integral: Vec<f64>,
    pub prev_error: Option<Vec<f64>>,
    pub last_seq: u64,
}

impl PidState {
    pub fn new(n: usize) -> Self {
        PidState {
            integral: alloc::vec![0.0; n],
            prev_error: None,
            last_seq: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub command: VelocityCommand,
    pub pid_error: Vec<f64>,
    pub state: PidState,
}

/// Feedforward-plus-PID tracker of a timed joint plan.
#[derive(Debug, Clone)]
pub struct VelocityController<'a> {
    traj: &'a JointTrajectory,
    gains: &'a PidGains,
    vel_limit: &'a [f64],
}

impl<'a> VelocityController<'a> {
    pub fn new(
        traj: &'a JointTrajectory,
        gains: &'a PidGains,
        vel_limit: &'a [f64],
    ) -> Result<Self, ConfigError> {
        let n = traj.n_joints();
        gains.validate(n)?;
        if vel_limit.len() != n {
            return Err(ConfigError::DimensionMismatch {
                what: "vel_limit",
                expected: n,
                found: vel_limit.len(),
            });
        }
        Ok(VelocityController {
            traj,
            gains,
            vel_limit,
        })
    }

    /// One control update at `now` from a possibly stale observation.
    ///
    /// The reference is indexed by `now` (time-based), not by progress.
    /// Past the end of the plan the final position is held with zero
    /// feedforward velocity.
    pub fn step(&self, now: Tick, observed: &JointState, state: &PidState) -> ControlOutput {
        debug_assert!(observed.tick <= now, "observation from the future");
        let observed = observed.clone();
        let dt = self.traj.dt();
        let last = self.traj.len() - 1;
        let sample = &self.traj.samples()[(now as usize).min(last)];
        let n = self.traj.n_joints();

        let error: Vec<f64> = sample
            .q_ref
            .iter()
            .zip(&observed.q)
            .map(|(r, q)| r - q)
            .collect();
        let prev = state.prev_error.as_deref().unwrap_or(&error);
        let mut integral = Vec::with_capacity(n);
        let mut qd_cmd = Vec::with_capacity(n);
        for j in 0..n {
            let clamp = self.gains.i_clamp[j];
            let i = (state.integral[j] + error[j] * dt).clamp(-clamp, clamp);
            let derivative = (error[j] - prev[j]) / dt;
            let lim = self.vel_limit[j];
            let u = sample.qd_ref[j]
                + self.gains.kp[j] * error[j]
                + self.gains.ki[j] * i
                + self.gains.kd[j] * derivative;
            integral.push(i);
            qd_cmd.push(u.clamp(-lim, lim));
        }
        let seq = state.last_seq + 1;
        ControlOutput {
            command: VelocityCommand {
                qd_cmd,
                seq,
                send_tick: now,
            },
            state: PidState {
                integral,
                prev_error: Some(error.clone()),
                last_seq: seq,
            },
            pid_error: error,
        }
    }
}
