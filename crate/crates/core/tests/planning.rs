mod common;

use common::{default_scenario, six_joint, square_points, Q_START};
use std::sync::OnceLock;

use nalgebra::Vector3;
use netqoc_core::{
    plan_cartesian, run, JointState, JointTrajectory, PidGains, PidState, ScenarioConfig,
    TrajectorySpec, VelocityController, WaypointList, WaypointSpace,
};
use proptest::prelude::*;

fn distance_to_segment(p: Vector3<f64>, a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[test]
fn six_joint_square_stays_on_straight_segments() {
    let arm = six_joint();
    let dt = 0.01;
    let speed = 0.1;
    let wp = WaypointList::new(WaypointSpace::Cartesian, square_points()).unwrap();
    let traj = plan_cartesian(&arm, &Q_START, &wp, speed, dt, 0.05).unwrap();

    // rebuild the constant-speed schedule independently and compare sample by sample
    let start = arm.forward_kinematics(&Q_START).unwrap().position;
    let mut corners = vec![start];
    corners.extend(square_points().iter().map(|p| Vector3::new(p[0], p[1], p[2])));
    let mut expected = vec![start];
    for w in corners.windows(2) {
        let len = (w[1] - w[0]).norm();
        let steps = ((len / (speed * dt)) - 1e-9).ceil().max(1.0) as usize;
        for i in 1..=steps {
            expected.push(w[0] + (w[1] - w[0]) * (i as f64 / steps as f64));
        }
    }
    assert_eq!(traj.len(), expected.len());
    let mut worst: f64 = 0.0;
    for (sample, goal) in traj.samples().iter().zip(&expected) {
        let p = arm.forward_kinematics(&sample.q_ref).unwrap().position;
        worst = worst.max((p - goal).norm());
        let on_path = corners
            .windows(2)
            .map(|w| distance_to_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(on_path <= 2e-3);
    }
    assert!(worst <= 2e-3, "worst sample deviation {worst}");
    traj.check_feasible(arm.vel_limit()).unwrap();
}

#[test]
fn beyond_reach_names_the_waypoint() {
    let mut points = square_points();
    points[2] = vec![3.0, 3.0, 3.0];
    let wp = WaypointList::new(WaypointSpace::Cartesian, points).unwrap();
    let err = plan_cartesian(&six_joint(), &Q_START, &wp, 0.1, 0.01, 0.05).unwrap_err();
    assert!(matches!(err, netqoc_core::PlanError::Unreachable { waypoint: 2, .. }), "{err}");
}

#[test]
fn too_fast_is_infeasible() {
    let wp = WaypointList::new(WaypointSpace::Cartesian, square_points()).unwrap();
    let err = plan_cartesian(&six_joint(), &Q_START, &wp, 50.0, 0.01, 0.05).unwrap_err();
    assert!(err.to_string().contains("lower speed") || matches!(err, netqoc_core::PlanError::Unreachable { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn random_waypoint_sets_plan_feasibly(
        offsets in proptest::collection::vec(
            (-0.08f64..0.08, -0.08f64..0.08, -0.08f64..0.08), 2..5),
    ) {
        let (x, y, z) = (-0.55, 0.0, 0.35);
        let points: Vec<Vec<f64>> = offsets.iter().map(|(dx, dy, dz)| vec![x + dx, y + dy, z + dz]).collect();
        let wp = WaypointList::new(WaypointSpace::Cartesian, points).unwrap();
        let arm = six_joint();
        let traj = plan_cartesian(&arm, &Q_START, &wp, 0.1, 0.01, 0.05).unwrap();
        let lim = arm.vel_limit();
        for pair in traj.samples().windows(2) {
            for ((a, b), l) in pair[0].q_ref.iter().zip(&pair[1].q_ref).zip(lim) {
                prop_assert!((b - a).abs() <= l * 0.01 + 1e-9);
            }
        }
    }
}

#[test]
fn zero_delay_closed_loop_reaches_the_endpoint() {
    for hz in [100.0, 1000.0] {
        let cfg = default_scenario(hz);
        let traj = cfg.plan().unwrap();
        let out = run(&cfg).unwrap();
        let last = out.log.records.last().unwrap();
        for (q, target) in last.q_exec.iter().zip(&traj.last().q_ref) {
            assert!((q - target).abs() < 1e-2);
        }
    }
}

#[test]
fn closed_loop_converges_on_random_joint_paths() {
    use proptest::strategy::{Strategy, ValueTree};
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strat = proptest::collection::vec(proptest::collection::vec(-0.4f64..0.4, 6), 1..4);
    for _ in 0..10 {
        let deltas = strat.new_tree(&mut runner).unwrap().current();
        let mut points = vec![Q_START.to_vec()];
        for d in deltas {
            points.push(Q_START.iter().zip(&d).map(|(q, dq)| q + dq).collect());
        }
        let wp = WaypointList::new(WaypointSpace::Joint, points).unwrap();
        let mut cfg = ScenarioConfig::new(six_joint(), TrajectorySpec::new(Q_START.to_vec(), wp, 0.5));
        cfg.duration = 8.0;
        let traj = cfg.plan().unwrap();
        let out = run(&cfg).unwrap();
        let last = out.log.records.last().unwrap();
        for (q, target) in last.q_exec.iter().zip(&traj.last().q_ref) {
            assert!((q - target).abs() < 1e-2);
        }
    }
}

fn planned_default() -> &'static (ScenarioConfig, JointTrajectory) {
    static PLAN: OnceLock<(ScenarioConfig, JointTrajectory)> = OnceLock::new();
    PLAN.get_or_init(|| {
        let cfg = default_scenario(100.0);
        let traj = cfg.plan().unwrap();
        (cfg, traj)
    })
}

proptest! {
    #[test]
    fn controller_is_deterministic_with_bounded_integrator(
        errors in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 6), 1..100),
        ki in 0.0f64..50.0,
        i_clamp in 0.0f64..2.0,
    ) {
        let (cfg, traj) = planned_default();
        let gains = PidGains::uniform(6, 10.0, ki, 0.1, i_clamp);
        let ctl = VelocityController::new(traj, &gains, cfg.arm.vel_limit()).unwrap();
        let mut state = PidState::new(6);
        for (t, e) in errors.iter().enumerate() {
            let t = t as u64;
            let q: Vec<f64> = traj.q_ref_at(t).iter().zip(e).map(|(r, e)| r - e).collect();
            let observed = JointState { q, qd: vec![0.0; 6], tick: t };
            let out = ctl.step(t, &observed, &state);
            let again = ctl.step(t, &observed, &state);
            prop_assert_eq!(&out.command, &again.command);
            prop_assert_eq!(&out.state, &again.state);
            prop_assert_eq!(out.command.seq, state.last_seq + 1);
            prop_assert!(out.state.integral.iter().all(|i| i.abs() <= i_clamp));
            prop_assert!(out.command.qd_cmd.iter().zip(cfg.arm.vel_limit()).all(|(v, l)| v.abs() <= *l));
            state = out.state;
        }
    }
}
