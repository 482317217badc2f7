#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use netqoc_core::{
    ArmDescription, DhRow, ScenarioConfig, TrajectorySpec, WaypointList, WaypointSpace,
};

/// Same geometry as the bundled six-joint arm file of the CLI crate.
// 3.14159 rad/s is the joint speed limit as listed, not an approximation of π
#[allow(clippy::approx_constant)]
pub fn six_joint() -> ArmDescription {
    let d = [0.089159, 0.0, 0.0, 0.10915, 0.09465, 0.0823];
    let a = [0.0, -0.425, -0.39225, 0.0, 0.0, 0.0];
    let alpha = [FRAC_PI_2, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0];
    let rows = (0..6).map(|i| DhRow::new(a[i], alpha[i], d[i], 0.0)).collect();
    ArmDescription::new(rows, vec![3.14159; 6], vec![-2.0 * PI; 6], vec![2.0 * PI; 6]).unwrap()
}

// the start pose of the bundled scenarios, written with rounded angles
#[allow(clippy::approx_constant)]
pub const Q_START: [f64; 6] = [0.0, -1.2, 1.5, -1.9, -1.5708, 0.0];

pub fn square_points() -> Vec<Vec<f64>> {
    vec![
        vec![-0.55, -0.10, 0.25],
        vec![-0.55, 0.10, 0.25],
        vec![-0.55, 0.10, 0.45],
        vec![-0.55, -0.10, 0.45],
        vec![-0.45, -0.10, 0.35],
    ]
}

/// The default scenario: six joints, five Cartesian waypoints at 0.1 m/s,
/// 10 s, zero-delay channels.
pub fn default_scenario(tick_hz: f64) -> ScenarioConfig {
    let wp = WaypointList::new(WaypointSpace::Cartesian, square_points()).unwrap();
    let mut cfg = ScenarioConfig::new(six_joint(), TrajectorySpec::new(Q_START.to_vec(), wp, 0.1));
    cfg.duration = 10.0;
    cfg.tick_hz = tick_hz;
    cfg.seed = 1;
    cfg
}

/// Planar two-link scenario from `q_start` along joint-space waypoints.
pub fn planar_joint_scenario(points: Vec<Vec<f64>>, speed: f64, duration: f64) -> ScenarioConfig {
    let q_start = points[0].clone();
    let wp = WaypointList::new(WaypointSpace::Joint, points).unwrap();
    let mut cfg = ScenarioConfig::new(ArmDescription::planar2(), TrajectorySpec::new(q_start, wp, speed));
    cfg.duration = duration;
    cfg
}
