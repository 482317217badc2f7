use netqoc_core::metrics::{cartesian_dev, cum_joint_dev, cum_pid_error, cum_vel_diff, detect_divergence};
use netqoc_core::{ArmDescription, RunLog, TickRecord};
use proptest::prelude::*;

fn record(n: usize) -> TickRecord {
    TickRecord {
        q_plan: vec![0.0; n],
        q_exec: vec![0.0; n],
        qd_cmd_sent: vec![0.0; n],
        qd_cmd_applied: vec![0.0; n],
        pid_error: vec![0.0; n],
        ee_position: [0.0; 3],
    }
}

fn log_of(dt: f64, records: Vec<TickRecord>) -> RunLog {
    let mut log = RunLog::new(dt);
    log.records = records;
    log
}

#[test]
fn rectangle_sums() {
    let mut recs = vec![record(1); 100];
    recs.iter_mut().for_each(|r| r.pid_error[0] = 0.1);
    assert!((cum_pid_error(&log_of(0.01, recs)).total - 0.1).abs() < 1e-12);

    let mut recs = vec![record(2); 100];
    recs.iter_mut().for_each(|r| r.q_exec[1] = 0.2);
    assert!((cum_joint_dev(&log_of(0.01, recs)).total - 0.2).abs() < 1e-12);

    let reference = log_of(0.01, vec![record(2); 100]);
    let mut recs = vec![record(2); 100];
    recs.iter_mut().for_each(|r| r.qd_cmd_sent[0] = 1.0);
    let diff = cum_vel_diff(&log_of(0.01, recs), &reference).unwrap();
    assert!((diff.cumulative.total - 1.0).abs() < 1e-12);
    assert!(!diff.truncated);
}

#[test]
fn perfect_tracking_is_zero() {
    let log = log_of(0.01, vec![record(3); 50]);
    assert_eq!(cum_pid_error(&log).total, 0.0);
    assert_eq!(cum_joint_dev(&log).total, 0.0);
    assert_eq!(detect_divergence(&log, 1.0), None);
}

#[test]
fn cartesian_offset_of_one_millimetre() {
    let arm = ArmDescription::planar2();
    let mut recs = vec![record(2); 20];
    recs.iter_mut().for_each(|r| r.ee_position = [2.0, 0.001, 0.0]);
    let dev = cartesian_dev(&arm, &log_of(0.01, recs)).unwrap();
    assert!((dev.mean - 0.001).abs() < 1e-12 && (dev.max - 0.001).abs() < 1e-12);
}

#[test]
fn injected_jump_is_found() {
    let mut recs = vec![record(2); 100];
    recs[50].q_exec[1] = 2.0;
    recs[70].q_exec[0] = f64::NAN;
    assert_eq!(detect_divergence(&log_of(0.01, recs.clone()), 1.0), Some(50));
    recs[50].q_exec[1] = 0.5;
    assert_eq!(detect_divergence(&log_of(0.01, recs), 1.0), Some(70));
}

#[test]
fn different_lengths_compare_the_common_prefix() {
    let a = log_of(0.01, vec![record(1); 30]);
    let mut recs = vec![record(1); 50];
    recs[40].qd_cmd_sent[0] = 9.0;
    let b = log_of(0.01, recs);
    let d = cum_vel_diff(&a, &b).unwrap();
    assert_eq!((d.compared, d.truncated, d.cumulative.total), (30, true, 0.0));
    assert!(cum_vel_diff(&a, &log_of(0.02, vec![])).is_err());
}

fn arb_log(n: usize) -> impl Strategy<Value = RunLog> {
    let row = (
        proptest::collection::vec(-3.0f64..3.0, n),
        proptest::collection::vec(-3.0f64..3.0, n),
        proptest::collection::vec(-3.0f64..3.0, n),
        proptest::collection::vec(-3.0f64..3.0, n),
    )
        .prop_map(|(q_plan, q_exec, qd, e)| TickRecord {
            q_plan,
            q_exec,
            qd_cmd_sent: qd.clone(),
            qd_cmd_applied: qd,
            pid_error: e,
            ee_position: [0.0; 3],
        });
    proptest::collection::vec(row, 0..80).prop_map(|records| log_of(0.01, records))
}

fn non_decreasing(series: &[f64]) -> bool {
    series.iter().all(|v| *v >= 0.0) && series.windows(2).all(|w| w[1] >= w[0])
}

proptest! {
    #[test]
    fn cumulative_series_are_non_decreasing(a in arb_log(3), b in arb_log(3)) {
        let pid = cum_pid_error(&a);
        let dev = cum_joint_dev(&a);
        let vel = cum_vel_diff(&a, &b).unwrap();
        prop_assert!(non_decreasing(&pid.series));
        prop_assert!(non_decreasing(&dev.series));
        prop_assert!(non_decreasing(&vel.cumulative.series));
        prop_assert_eq!(pid.series.last().copied().unwrap_or(0.0), pid.total);
    }

    #[test]
    fn vel_diff_is_reflexive_and_symmetric(a in arb_log(2), b in arb_log(2)) {
        prop_assert_eq!(cum_vel_diff(&a, &a).unwrap().cumulative.total, 0.0);
        prop_assert_eq!(
            cum_vel_diff(&a, &b).unwrap().cumulative,
            cum_vel_diff(&b, &a).unwrap().cumulative
        );
    }
}
