//! `netqoc run | sweep | validate`.
//!
//! Exit codes: 0 success, 1 configuration or usage error (message on
//! standard error), 2 the run (or a sweep point) diverged. Outputs of a
//! diverged run are still written.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use netqoc_core::{
    ArmDescription, JointTrajectory, KpiReport, RunLog, ScenarioConfig, SweepPoint,
    SweepSpec, run_with_plan,
};

use crate::csv_out::{columns_table, cumulative_table, run_table, trajectory_table, velocity_table, write_atomic};
use crate::error::{Error, Result};
use crate::scenario_file::load_scenario;
use crate::summary::Summary;
use crate::sweep::run_sweep_parallel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

pub const RUN_CSV: &str = "run.csv";
pub const SUMMARY: &str = "summary.txt";
pub const TRAJECTORY_CSV: &str = "trajectory_xyz.csv";
pub const VELOCITY_CSV: &str = "velocity.csv";
pub const CUMULATIVE_CSV: &str = "cumulative.csv";
pub const SWEEP_CUM_VEL_DIFF_CSV: &str = "cum_vel_diff.csv";
pub const SWEEP_TRAJECTORIES_CSV: &str = "trajectories.csv";

#[derive(Debug, Parser)]
#[command(name = "netqoc", version, about = "Quality-of-control simulation of a remotely controlled arm over impaired networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute one scenario and export per-tick data and KPIs.
    Run(RunArgs),
    /// Run a one-way latency sweep against the zero-latency reference.
    Sweep(SweepArgs),
    /// Parse the scenario and plan its trajectory without simulating.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, env = "QOC_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Comma-separated one-way latencies in seconds, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    pub latencies: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
}

fn load(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut config = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn create_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn plan_xyz(arm: &ArmDescription, log: &RunLog) -> Vec<[f64; 3]> {
    log.records
        .iter()
        .map(|r| {
            arm.forward_kinematics(&r.q_plan)
                .map(|p| [p.position.x, p.position.y, p.position.z])
                .unwrap_or([f64::NAN; 3])
        })
        .collect()
}

pub fn cmd_run(args: &RunArgs) -> Result<i32> {
    let config = load(&args.scenario)?;
    let traj = config.plan()?;
    let outcome = run_with_plan(&config, &traj)?;
    let report = KpiReport::compute(&config.arm, &outcome.log, None, config.divergence_threshold)
        .map_err(netqoc_core::RunError::from)?;

    let out = &args.out;
    create_out_dir(out)?;
    let n = config.arm.n_joints();
    let log = &outcome.log;
    run_table(log, n).write(&out.join(RUN_CSV))?;
    trajectory_table(log, &plan_xyz(&config.arm, log)).write(&out.join(TRAJECTORY_CSV))?;
    velocity_table(log, n).write(&out.join(VELOCITY_CSV))?;
    cumulative_table(
        log.dt,
        &[
            ("cum_pid_error", &report.cum_pid_error.series),
            ("cum_joint_dev", &report.cum_joint_dev.series),
        ],
    )
    .write(&out.join(CUMULATIVE_CSV))?;

    let mut summary = Summary::new();
    summary.entry("scenario", args.scenario.scenario.display());
    summary.entry("seed", config.seed);
    summary.entry("tick_hz", config.tick_hz);
    summary.entry("plan_samples", traj.len());
    summary.report("", &outcome, &report);
    write_atomic(&out.join(SUMMARY), summary.as_str().as_bytes())?;

    let diverged = outcome.diverged() || report.diverged();
    if diverged {
        eprintln!(
            "run diverged at tick {}; partial outputs written to {}",
            outcome.divergence.as_ref().map(|d| d.tick()).or(report.diverged_at).unwrap_or(0),
            out.display()
        );
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

fn latency_label(latency: f64) -> String {
    format!("latency_{latency}")
}

pub fn point_csv_name(index: usize) -> String {
    format!("point_{index:02}.csv")
}

fn write_sweep_files(out: &Path, spec: &SweepSpec, traj: &JointTrajectory, points: &[SweepPoint]) -> Result<()> {
    let config = &spec.base;
    let dt = config.dt();
    let n = config.arm.n_joints();
    for (i, p) in points.iter().enumerate() {
        if let Ok((outcome, _)) = &p.result {
            run_table(&outcome.log, n).write(&out.join(point_csv_name(i)))?;
        }
    }

    let empty: &[f64] = &[];
    let mut header = vec!["time_s".to_string()];
    let mut series: Vec<&[f64]> = Vec::new();
    for p in points {
        header.push(latency_label(p.latency));
        series.push(match &p.result {
            Ok((_, report)) => report
                .cum_vel_diff
                .as_ref()
                .map_or(empty, |v| v.cumulative.series.as_slice()),
            Err(_) => empty,
        });
    }
    columns_table(dt, header, series).write(&out.join(SWEEP_CUM_VEL_DIFF_CSV))?;

    // planned xyz, then executed xyz for each latency
    let plan: Vec<[f64; 3]> = (0..config.n_ticks())
        .map(|t| {
            config
                .arm
                .forward_kinematics(traj.q_ref_at(t))
                .map(|p| [p.position.x, p.position.y, p.position.z])
                .unwrap_or([f64::NAN; 3])
        })
        .collect();
    let mut header = vec!["time_s".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (axis, name) in ["plan_x", "plan_y", "plan_z"].iter().enumerate() {
        header.push(name.to_string());
        columns.push(plan.iter().map(|p| p[axis]).collect());
    }
    for p in points {
        for (axis, name) in ["x", "y", "z"].iter().enumerate() {
            header.push(format!("exec_{name}_{}", latency_label(p.latency)));
            columns.push(match &p.result {
                Ok((outcome, _)) => outcome.log.records.iter().map(|r| r.ee_position[axis]).collect(),
                Err(_) => Vec::new(),
            });
        }
    }
    columns_table(dt, header, columns.iter().map(Vec::as_slice).collect())
        .write(&out.join(SWEEP_TRAJECTORIES_CSV))?;

    let mut summary = Summary::new();
    summary.entry("seed", config.seed);
    summary.entry("tick_hz", config.tick_hz);
    summary.entry("plan_samples", traj.len());
    summary.sweep(points);
    write_atomic(&out.join(SUMMARY), summary.as_str().as_bytes())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let config = load(&args.scenario)?;
    let spec = SweepSpec::new(config, args.latencies.clone());
    spec.validate()?;
    let traj = spec.plan()?;
    let points = run_sweep_parallel(&spec)?;

    create_out_dir(&args.out)?;
    write_sweep_files(&args.out, &spec, &traj, &points)?;

    let mut code = EXIT_OK;
    for p in &points {
        match &p.result {
            Ok((outcome, report)) if outcome.diverged() || report.diverged() => {
                eprintln!("latency {} s diverged", p.latency);
                code = code.max(EXIT_DIVERGED);
            }
            Ok(_) => {}
            Err(e) => {
                eprintln!("latency {} s failed: {e}", p.latency);
                code = code.max(EXIT_DIVERGED);
            }
        }
    }
    Ok(code)
}

pub fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = load_scenario(&args.scenario)?;
    let traj = config.plan()?;
    if (config.n_ticks() as usize) + 1 < traj.len() {
        return Err(Error::Usage(format!(
            "duration {} s does not cover the planned trajectory of {} s",
            config.duration,
            traj.total_duration()
        )));
    }
    writeln!(
        stdout,
        "ok: {} plan samples, duration {:.3} s at {} Hz",
        traj.len(),
        traj.total_duration(),
        config.tick_hz
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}

/// Run a parsed command line and map errors to exit code 1.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a, &mut std::io::stdout()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
