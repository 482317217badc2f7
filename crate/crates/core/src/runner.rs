//! The per-tick simulation loop and latency sweeps.
//!
//! Order within tick `t`:
//!
//! 1. deliver status messages, adopt the freshest as the observed state;
//! 2. the controller computes a command, pushed into the command channel;
//! 3. deliver commands, adopt the freshest as the held command (zero-order
//!    hold, subject to the hold policy);
//! 4. the plant advances under the held command;
//! 5. the plant's new state (stamped `t + 1`) is pushed into the status
//!    channel;
//! 6. the tick is logged.
//!
//! With zero-delay channels the loop therefore closes within one tick.

use alloc::vec::Vec;

use crate::arm::{plant_step, ArmDescription, JointState};
use crate::channel::{freshest, Channel, ChannelConfig, ChannelStats, StampedMessage};
use crate::control::{
    plan_cartesian, plan_joint, JointTrajectory, PidGains, PidState, VelocityCommand,
    VelocityController, WaypointList, WaypointSpace, DEFAULT_DAMPING,
};
use crate::error::{ConfigError, PlantError, RunError, SweepError};
use crate::metrics::{divergent_record, KpiReport, RunLog, RunMeta, TickRecord, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::Tick;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub q_start: Vec<f64>,
    pub waypoints: WaypointList,
    /// m/s for Cartesian waypoints, rad/s (L∞) for joint waypoints
    pub speed: f64,
    pub damping: f64,
}

impl TrajectorySpec {
    pub fn new(q_start: Vec<f64>, waypoints: WaypointList, speed: f64) -> Self {
        TrajectorySpec {
            q_start,
            waypoints,
            speed,
            damping: DEFAULT_DAMPING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HoldPolicy {
    /// Keep applying the last received command forever.
    HoldLast,
    /// Fall back to zero velocity when no new command arrived for this many
    /// seconds.
    ZeroAfter(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub arm: ArmDescription,
    pub trajectory: TrajectorySpec,
    pub gains: PidGains,
    pub tick_hz: f64,
    pub plant_substeps: u32,
    /// seconds
    pub duration: f64,
    pub cmd_channel: ChannelConfig,
    pub status_channel: ChannelConfig,
    pub hold_policy: HoldPolicy,
    pub seed: u64,
    pub divergence_threshold: f64,
}

impl ScenarioConfig {
    /// Defaults: 100 Hz, 10 plant substeps, default gains, zero-delay
    /// channels, hold-last, seed 0. The duration is left at 0 and must be set.
    pub fn new(arm: ArmDescription, trajectory: TrajectorySpec) -> Self {
        let n = arm.n_joints();
        ScenarioConfig {
            arm,
            trajectory,
            gains: PidGains::default_for(n),
            tick_hz: 100.0,
            plant_substeps: 10,
            duration: 0.0,
            cmd_channel: ChannelConfig::zero(),
            status_channel: ChannelConfig::zero(),
            hold_policy: HoldPolicy::HoldLast,
            seed: 0,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_hz
    }

    pub fn n_ticks(&self) -> u64 {
        libm::round(self.duration * self.tick_hz) as u64
    }

    /// Queue length equivalent to a one-way latency at this tick rate.
    pub fn latency_ticks(&self, latency_s: f64) -> u64 {
        libm::round(latency_s * self.tick_hz) as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.arm.n_joints();
        if !(self.tick_hz > 0.0 && self.tick_hz.is_finite()) {
            return Err(ConfigError::invalid("tick_hz", "must be positive"));
        }
        if self.plant_substeps == 0 {
            return Err(ConfigError::invalid("plant_substeps", "must be at least 1"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::invalid("duration", "must be positive"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(ConfigError::invalid("divergence_threshold", "must be positive"));
        }
        if let HoldPolicy::ZeroAfter(t) = self.hold_policy {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ConfigError::invalid("hold_policy", "zero-after time must be non-negative"));
            }
        }
        if self.trajectory.q_start.len() != n {
            return Err(ConfigError::DimensionMismatch {
                what: "trajectory.start",
                expected: n,
                found: self.trajectory.q_start.len(),
            });
        }
        self.gains.validate(n)?;
        self.cmd_channel
            .validate()
            .map_err(|e| prefix_field(e, "cmd_channel"))?;
        self.status_channel
            .validate()
            .map_err(|e| prefix_field(e, "status_channel"))?;
        Ok(())
    }

    /// Plan the trajectory at this scenario's tick rate.
    pub fn plan(&self) -> Result<JointTrajectory, RunError> {
        self.validate()?;
        let spec = &self.trajectory;
        let traj = match spec.waypoints.space() {
            WaypointSpace::Cartesian => plan_cartesian(
                &self.arm,
                &spec.q_start,
                &spec.waypoints,
                spec.speed,
                self.dt(),
                spec.damping,
            )?,
            WaypointSpace::Joint => plan_joint(
                &spec.q_start,
                &spec.waypoints,
                spec.speed,
                self.dt(),
                self.arm.vel_limit(),
            )?,
        };
        Ok(traj)
    }
}

fn prefix_field(err: ConfigError, prefix: &str) -> ConfigError {
    match err {
        ConfigError::InvalidValue { field, reason } => ConfigError::InvalidValue {
            field: alloc::format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    /// A joint left the threshold band or a logged value went non-finite.
    Threshold { tick: Tick },
    /// The plant refused the held command.
    PlantAbort { tick: Tick, error: PlantError },
}

impl Divergence {
    pub fn tick(&self) -> Tick {
        match self {
            Divergence::Threshold { tick } | Divergence::PlantAbort { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub log: RunLog,
    /// Seq of the command the plant applied at each logged tick (0 before
    /// any command arrived).
    pub applied_seq: Vec<u64>,
    pub divergence: Option<Divergence>,
    pub cmd_stats: ChannelStats,
    pub status_stats: ChannelStats,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }
}

/// One scenario run, advanced tick by tick.
pub struct Simulation<'a> {
    config: &'a ScenarioConfig,
    controller: VelocityController<'a>,
    traj: &'a JointTrajectory,
    cmd_channel: Channel<VelocityCommand>,
    status_channel: Channel<JointState>,
    state: JointState,
    observed: JointState,
    pid: PidState,
    held: VelocityCommand,
    last_status_seq: u64,
    last_cmd_tick: Option<Tick>,
    tick: Tick,
    n_ticks: Tick,
    log: RunLog,
    applied_seq: Vec<u64>,
    divergence: Option<Divergence>,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a ScenarioConfig, traj: &'a JointTrajectory) -> Result<Self, RunError> {
        config.validate()?;
        let dt = config.dt();
        let cmd = Channel::new(&config.cmd_channel, config.seed, dt)
            .map_err(|e| prefix_field(e, "cmd_channel"))?;
        let status = Channel::new(&config.status_channel, config.seed ^ 1, dt)
            .map_err(|e| prefix_field(e, "status_channel"))?;
        Self::with_channels(config, traj, cmd, status)
    }

    /// Run with caller-supplied channels instead of the configured ones.
    pub fn with_channels(
        config: &'a ScenarioConfig,
        traj: &'a JointTrajectory,
        cmd_channel: Channel<VelocityCommand>,
        status_channel: Channel<JointState>,
    ) -> Result<Self, RunError> {
        config.validate()?;
        let n = config.arm.n_joints();
        if traj.n_joints() != n {
            return Err(ConfigError::DimensionMismatch {
                what: "trajectory joints",
                expected: n,
                found: traj.n_joints(),
            }
            .into());
        }
        if (traj.dt() - config.dt()).abs() > 1e-15 {
            return Err(ConfigError::invalid("tick_hz", "trajectory was planned at a different rate").into());
        }
        let n_ticks = config.n_ticks();
        if (n_ticks as usize) + 1 < traj.len() {
            return Err(ConfigError::invalid(
                "duration",
                alloc::format!(
                    "{} s does not cover the planned trajectory of {} s",
                    config.duration,
                    traj.total_duration()
                ),
            )
            .into());
        }
        let controller = VelocityController::new(traj, &config.gains, config.arm.vel_limit())?;
        let state = JointState::at_rest(config.trajectory.q_start.clone());
        let mut log = RunLog::new(config.dt());
        log.meta = Some(RunMeta {
            seed: config.seed,
            gains: config.gains.clone(),
            cmd_channel: config.cmd_channel.clone(),
            status_channel: config.status_channel.clone(),
        });
        log.records.reserve(n_ticks as usize);
        Ok(Simulation {
            config,
            controller,
            traj,
            cmd_channel,
            status_channel,
            observed: state.clone(),
            state,
            pid: PidState::new(n),
            held: VelocityCommand::zero(n),
            last_status_seq: 0,
            last_cmd_tick: None,
            tick: 0,
            n_ticks,
            log,
            applied_seq: Vec::with_capacity(n_ticks as usize),
            divergence: None,
        })
    }

    pub fn tick(&self) -> Tick {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.divergence.is_some() || self.tick >= self.n_ticks
    }

    pub fn held_command(&self) -> &VelocityCommand {
        &self.held
    }

    pub fn state(&self) -> &JointState {
        &self.state
    }

    pub fn observed(&self) -> &JointState {
        &self.observed
    }

    /// Advance by one tick. Returns false once the run is over.
    pub fn step(&mut self) -> bool {
        if self.is_finished() {
            return false;
        }
        let t = self.tick;
        let dt = self.config.dt();

        let statuses = self.status_channel.deliver(t);
        if let Some(m) = freshest(&statuses, self.last_status_seq) {
            self.observed = m.payload.clone();
            self.last_status_seq = m.seq;
        }

        let out = self.controller.step(t, &self.observed, &self.pid);
        self.pid = out.state;
        let sent = out.command;
        self.cmd_channel
            .push(&StampedMessage::new(sent.clone(), sent.seq, t), t);

        let commands = self.cmd_channel.deliver(t);
        if let Some(m) = freshest(&commands, self.held.seq) {
            self.held = m.payload.clone();
            self.last_cmd_tick = Some(t);
        } else if let HoldPolicy::ZeroAfter(timeout) = self.config.hold_policy {
            let since = self.last_cmd_tick.map_or(t + 1, |last| t - last);
            if since as f64 * dt >= timeout {
                self.held.qd_cmd.iter_mut().for_each(|v| *v = 0.0);
            }
        }

        let ee = self
            .config
            .arm
            .forward_kinematics(&self.state.q)
            .map(|p| [p.position.x, p.position.y, p.position.z])
            .unwrap_or([f64::NAN; 3]);
        let record = TickRecord {
            q_plan: self.traj.q_ref_at(t).to_vec(),
            q_exec: self.state.q.clone(),
            qd_cmd_sent: sent.qd_cmd,
            qd_cmd_applied: self.held.qd_cmd.clone(),
            pid_error: out.pid_error,
            ee_position: ee,
        };
        let diverged = divergent_record(&record, self.config.divergence_threshold);
        self.log.records.push(record);
        self.applied_seq.push(self.held.seq);
        if diverged {
            self.divergence = Some(Divergence::Threshold { tick: t });
            return false;
        }

        match plant_step(
            &self.config.arm,
            &self.state,
            &self.held,
            dt,
            self.config.plant_substeps,
        ) {
            Ok(next) => self.state = next,
            Err(error) => {
                self.divergence = Some(Divergence::PlantAbort { tick: t, error });
                return false;
            }
        }

        let status = StampedMessage::new(self.state.clone(), self.state.tick, t + 1);
        self.status_channel.push(&status, t + 1);
        self.tick += 1;
        !self.is_finished()
    }

    pub fn finish(mut self) -> RunOutcome {
        while self.step() {}
        RunOutcome {
            log: self.log,
            applied_seq: self.applied_seq,
            divergence: self.divergence,
            cmd_stats: self.cmd_channel.close(),
            status_stats: self.status_channel.close(),
        }
    }
}

/// Run a scenario against an already planned trajectory.
pub fn run_with_plan(config: &ScenarioConfig, traj: &JointTrajectory) -> Result<RunOutcome, RunError> {
    Ok(Simulation::new(config, traj)?.finish())
}

/// Plan and run a scenario.
pub fn run(config: &ScenarioConfig) -> Result<RunOutcome, RunError> {
    let traj = config.plan()?;
    run_with_plan(config, &traj)
}

/// A latency sweep: each point applies its one-way latency as a shift queue
/// on both directions of `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    /// one-way latencies in seconds, ascending
    pub latencies: Vec<f64>,
    /// Used as the reference when `latencies` has no 0 entry.
    pub reference: Option<ScenarioConfig>,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, latencies: Vec<f64>) -> Self {
        SweepSpec {
            base,
            latencies,
            reference: None,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.latencies.is_empty() {
            return Err(SweepError::Empty);
        }
        if let Some(&bad) = self.latencies.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(SweepError::InvalidLatency(bad));
        }
        if let Some(i) = self.latencies.windows(2).position(|w| w[1] < w[0]) {
            return Err(SweepError::Unsorted(i + 1));
        }
        if self.latencies[0] != 0.0 && self.reference.is_none() {
            return Err(SweepError::NoReference);
        }
        self.base.validate().map_err(RunError::from)?;
        Ok(())
    }

    /// The base scenario with `latency` applied to both channels.
    pub fn point_config(&self, latency: f64) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        let ticks = cfg.latency_ticks(latency);
        cfg.cmd_channel = ChannelConfig::queue(ticks);
        cfg.status_channel = ChannelConfig::queue(ticks);
        cfg
    }

    /// The reference scenario: the explicit one, or the 0-latency point.
    pub fn reference_config(&self) -> ScenarioConfig {
        self.reference
            .clone()
            .unwrap_or_else(|| self.point_config(0.0))
    }

    /// Plan once for every point of the sweep.
    pub fn plan(&self) -> Result<JointTrajectory, RunError> {
        self.base.plan()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub latency: f64,
    pub result: Result<(RunOutcome, KpiReport), RunError>,
}

/// Attach KPI reports to independently executed sweep runs.
///
/// `runs[i]` belongs to `spec.latencies[i]`; `reference` is the reference
/// run (for a 0-latency first point, the same run as `runs[0]`).
pub fn assemble_sweep(
    spec: &SweepSpec,
    reference: &RunOutcome,
    runs: Vec<Result<RunOutcome, RunError>>,
) -> Vec<SweepPoint> {
    let arm = &spec.base.arm;
    let threshold = spec.base.divergence_threshold;
    spec.latencies
        .iter()
        .zip(runs)
        .map(|(&latency, run)| SweepPoint {
            latency,
            result: run.and_then(|outcome| {
                let report =
                    KpiReport::compute(arm, &outcome.log, Some(&reference.log), threshold)?;
                Ok((outcome, report))
            }),
        })
        .collect()
}

/// Run every sweep point in order against one shared plan.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepPoint>, SweepError> {
    spec.validate()?;
    let traj = spec.plan().map_err(SweepError::Reference)?;
    let runs: Vec<_> = spec
        .latencies
        .iter()
        .map(|&l| run_with_plan(&spec.point_config(l), &traj))
        .collect();
    let reference = match (&spec.reference, &runs[0]) {
        (Some(cfg), _) => run_with_plan(cfg, &traj).map_err(SweepError::Reference)?,
        (None, Ok(outcome)) => outcome.clone(),
        (None, Err(e)) => return Err(SweepError::Reference(e.clone())),
    };
    Ok(assemble_sweep(spec, &reference, runs))
}
