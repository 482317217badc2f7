use netqoc_core::{plant_step, ArmDescription, DhRow, JointState, VelocityCommand};
use proptest::prelude::*;

fn one_joint(vel: f64, lo: f64, hi: f64) -> ArmDescription {
    ArmDescription::new(vec![DhRow::new(1.0, 0.0, 0.0, 0.0)], vec![vel], vec![lo], vec![hi]).unwrap()
}

fn cmd(qd: Vec<f64>) -> VelocityCommand {
    VelocityCommand {
        qd_cmd: qd,
        seq: 1,
        send_tick: 0,
    }
}

#[test]
fn constant_velocity_step() {
    let arm = one_joint(2.0, -10.0, 10.0);
    let next = plant_step(&arm, &JointState::at_rest(vec![0.0]), &cmd(vec![1.0]), 0.01, 10).unwrap();
    assert!((next.q[0] - 0.01).abs() < 1e-15);
    assert_eq!(next.qd, vec![1.0]);
    assert_eq!(next.tick, 1);
}

#[test]
fn saturated_command_is_clamped() {
    let arm = one_joint(2.0, -10.0, 10.0);
    let next = plant_step(&arm, &JointState::at_rest(vec![0.0]), &cmd(vec![5.0]), 0.01, 10).unwrap();
    assert!((next.q[0] - 0.02).abs() < 1e-15);
    assert_eq!(next.qd, vec![2.0]);
}

#[test]
fn zero_command_only_advances_tick() {
    let arm = ArmDescription::planar2();
    let start = JointState {
        q: vec![0.3, -0.7],
        qd: vec![0.0, 0.0],
        tick: 41,
    };
    let next = plant_step(&arm, &start, &cmd(vec![0.0, 0.0]), 0.01, 10).unwrap();
    assert_eq!(next.q, start.q);
    assert_eq!(next.tick, 42);
}

#[test]
fn non_finite_command_aborts() {
    let arm = ArmDescription::planar2();
    let start = JointState::at_rest(vec![0.0, 0.0]);
    assert!(plant_step(&arm, &start, &cmd(vec![0.0, f64::NAN]), 0.01, 10).is_err());
    assert!(plant_step(&arm, &start, &cmd(vec![f64::INFINITY, 0.0]), 0.01, 10).is_err());
}

proptest! {
    #[test]
    fn velocity_and_position_stay_within_limits(
        q0 in -1.0f64..1.0,
        cmds in proptest::collection::vec(-50.0f64..50.0, 1..200),
        vel in 0.1f64..5.0,
        substeps in 1u32..20,
    ) {
        let (lo, hi) = (-1.0, 1.0);
        let arm = one_joint(vel, lo, hi);
        let mut state = JointState::at_rest(vec![q0]);
        for c in cmds {
            state = plant_step(&arm, &state, &cmd(vec![c]), 0.01, substeps).unwrap();
            prop_assert!(state.qd[0].abs() <= vel);
            prop_assert!(state.q[0] >= lo && state.q[0] <= hi);
            // a joint resting on a limit never reports motion into it
            if state.q[0] == hi {
                prop_assert!(state.qd[0] <= 0.0);
            }
            if state.q[0] == lo {
                prop_assert!(state.qd[0] >= 0.0);
            }
        }
    }

    #[test]
    fn constant_command_integrates_exactly(
        // dyadic values keep k·dt·c exactly representable
        c_num in -64i32..64,
        k in 1u32..200,
        substeps_pow in 0u32..5,
    ) {
        let c = f64::from(c_num) / 32.0;
        let dt = 1.0 / 128.0;
        let arm = one_joint(3.0, -1e6, 1e6);
        let mut state = JointState::at_rest(vec![0.0]);
        for _ in 0..k {
            state = plant_step(&arm, &state, &cmd(vec![c]), dt, 1 << substeps_pow).unwrap();
        }
        prop_assert_eq!(state.q[0], f64::from(k) * dt * c);
        prop_assert_eq!(state.tick, u64::from(k));
    }
}
