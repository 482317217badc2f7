//! Serial arm geometry (standard Denavit-Hartenberg), forward kinematics,
//! the geometric Jacobian and a kinematic plant integrator.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Matrix6xX, Vector3};

use crate::control::VelocityCommand;
use crate::error::{ConfigError, PlantError};
use crate::Tick;

/// One standard DH row: `Rz(theta) · Tz(d) · Tx(a) · Rx(alpha)`, where
/// `theta = q + theta_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

impl DhRow {
    pub const fn new(a: f64, alpha: f64, d: f64, theta_offset: f64) -> Self {
        DhRow {
            a,
            alpha,
            d,
            theta_offset,
        }
    }

    /// Homogeneous transform of this link for joint angle `q`.
    pub fn transform(&self, q: f64) -> Matrix4<f64> {
        let theta = q + self.theta_offset;
        let (st, ct) = libm::sincos(theta);
        let (sa, ca) = libm::sincos(self.alpha);
        Matrix4::new(
            ct,
            -st * ca,
            st * sa,
            self.a * ct,
            st,
            ct * ca,
            -ct * sa,
            self.a * st,
            0.0,
            sa,
            ca,
            self.d,
            0.0,
            0.0,
            0.0,
            1.0,
        )
    }
}

/// Geometry and limits of a revolute serial arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmDescription {
    dh: Vec<DhRow>,
    vel_limit: Vec<f64>,
    pos_limit_lo: Vec<f64>,
    pos_limit_hi: Vec<f64>,
}

impl ArmDescription {
    pub fn new(
        dh: Vec<DhRow>,
        vel_limit: Vec<f64>,
        pos_limit_lo: Vec<f64>,
        pos_limit_hi: Vec<f64>,
    ) -> Result<Self, ConfigError> {
        let n = dh.len();
        if n == 0 {
            return Err(ConfigError::invalid("n_joints", "an arm needs at least one joint"));
        }
        for (what, len) in [
            ("vel_limit", vel_limit.len()),
            ("pos_limit_lo", pos_limit_lo.len()),
            ("pos_limit_hi", pos_limit_hi.len()),
        ] {
            if len != n {
                return Err(ConfigError::DimensionMismatch {
                    what,
                    expected: n,
                    found: len,
                });
            }
        }
        for (i, row) in dh.iter().enumerate() {
            if ![row.a, row.alpha, row.d, row.theta_offset]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(ConfigError::invalid(
                    alloc::format!("dh.{i}"),
                    "DH parameters must be finite",
                ));
            }
        }
        for i in 0..n {
            if !(vel_limit[i] > 0.0 && vel_limit[i].is_finite()) {
                return Err(ConfigError::invalid(
                    alloc::format!("vel_limit.{i}"),
                    "must be strictly positive and finite",
                ));
            }
            if !(pos_limit_lo[i] < pos_limit_hi[i]) {
                return Err(ConfigError::invalid(
                    alloc::format!("pos_limit_lo.{i}"),
                    "must be strictly below pos_limit_hi",
                ));
            }
        }
        Ok(ArmDescription {
            dh,
            vel_limit,
            pos_limit_lo,
            pos_limit_hi,
        })
    }

    /// Two unit links in the xy plane, 2 rad/s velocity limit, ±2π range.
    pub fn planar2() -> Self {
        ArmDescription::new(
            alloc::vec![DhRow::new(1.0, 0.0, 0.0, 0.0); 2],
            alloc::vec![2.0; 2],
            alloc::vec![-2.0 * PI; 2],
            alloc::vec![2.0 * PI; 2],
        )
        .expect("planar2 is well-formed")
    }

    pub fn n_joints(&self) -> usize {
        self.dh.len()
    }

    pub fn dh_rows(&self) -> &[DhRow] {
        &self.dh
    }

    pub fn vel_limit(&self) -> &[f64] {
        &self.vel_limit
    }

    pub fn pos_limit_lo(&self) -> &[f64] {
        &self.pos_limit_lo
    }

    pub fn pos_limit_hi(&self) -> &[f64] {
        &self.pos_limit_hi
    }

    fn check_dim(&self, what: &'static str, q: &[f64]) -> Result<(), ConfigError> {
        if q.len() != self.n_joints() {
            return Err(ConfigError::DimensionMismatch {
                what,
                expected: self.n_joints(),
                found: q.len(),
            });
        }
        if !q.iter().all(|v| v.is_finite()) {
            return Err(ConfigError::invalid(what, "joint values must be finite"));
        }
        Ok(())
    }

    /// Base-to-frame transforms `T_0^i` for `i = 0..=n` (index 0 is identity).
    fn frames(&self, q: &[f64]) -> Vec<Matrix4<f64>> {
        let mut frames = Vec::with_capacity(self.n_joints() + 1);
        let mut t = Matrix4::identity();
        frames.push(t);
        for (row, &qi) in self.dh.iter().zip(q) {
            t *= row.transform(qi);
            frames.push(t);
        }
        frames
    }

    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Pose, ConfigError> {
        self.check_dim("q", q)?;
        let frames = self.frames(q);
        Ok(Pose::from_homogeneous(frames.last().expect("n ≥ 1")))
    }

    /// Geometric Jacobian: rows 0..3 are linear velocity (m/s), rows 3..6
    /// angular velocity (rad/s), one column per unit joint rate.
    pub fn jacobian(&self, q: &[f64]) -> Result<Matrix6xX<f64>, ConfigError> {
        self.check_dim("q", q)?;
        let frames = self.frames(q);
        let n = self.n_joints();
        let p_e = translation(&frames[n]);
        let mut jac = Matrix6xX::zeros(n);
        for j in 0..n {
            // joint j rotates about z of frame j-1 (frames[j] here)
            let z = frames[j].fixed_view::<3, 1>(0, 2).into_owned();
            let p = translation(&frames[j]);
            let lin = z.cross(&(p_e - p));
            jac.fixed_view_mut::<3, 1>(0, j).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, j).copy_from(&z);
        }
        Ok(jac)
    }
}

fn translation(t: &Matrix4<f64>) -> Vector3<f64> {
    t.fixed_view::<3, 1>(0, 3).into_owned()
}

/// End-effector pose in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Pose {
    pub fn from_homogeneous(t: &Matrix4<f64>) -> Self {
        Pose {
            position: translation(t),
            rotation: t.fixed_view::<3, 3>(0, 0).into_owned(),
        }
    }
}

/// Plant status: joint positions and velocities at a tick.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub tick: Tick,
}

impl JointState {
    pub fn at_rest(q: Vec<f64>) -> Self {
        let n = q.len();
        JointState {
            q,
            qd: alloc::vec![0.0; n],
            tick: 0,
        }
    }
}

/// Advance the kinematic plant by one control tick under the held command.
///
/// The commanded velocity is clamped to the joint velocity limits and
/// integrated with `substeps` explicit Euler steps of `dt / substeps`.
/// A joint that hits a position limit stops there with zero velocity.
pub fn plant_step(
    arm: &ArmDescription,
    state: &JointState,
    held_cmd: &VelocityCommand,
    dt: f64,
    substeps: u32,
) -> Result<JointState, PlantError> {
    let n = arm.n_joints();
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ConfigError::invalid("dt", "must be positive").into());
    }
    if substeps == 0 {
        return Err(ConfigError::invalid("plant_substeps", "must be at least 1").into());
    }
    for (what, len) in [("state.q", state.q.len()), ("qd_cmd", held_cmd.qd_cmd.len())] {
        if len != n {
            return Err(ConfigError::DimensionMismatch {
                what,
                expected: n,
                found: len,
            }
            .into());
        }
    }
    if let Some(joint) = held_cmd.qd_cmd.iter().position(|v| !v.is_finite()) {
        return Err(PlantError::NonFiniteCommand {
            joint,
            tick: state.tick,
        });
    }

    let h = dt / f64::from(substeps);
    let mut q = state.q.clone();
    let mut qd = Vec::with_capacity(n);
    for j in 0..n {
        let lim = arm.vel_limit[j];
        let v = held_cmd.qd_cmd[j].clamp(-lim, lim);
        let (lo, hi) = (arm.pos_limit_lo[j], arm.pos_limit_hi[j]);
        let mut saturated = false;
        for _ in 0..substeps {
            let next = q[j] + h * v;
            if next >= hi && v > 0.0 {
                q[j] = hi;
                saturated = true;
                break;
            }
            if next <= lo && v < 0.0 {
                q[j] = lo;
                saturated = true;
                break;
            }
            q[j] = next;
        }
        qd.push(if saturated { 0.0 } else { v });
    }
    Ok(JointState {
        q,
        qd,
        tick: state.tick + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::FRAC_PI_2;

    fn cmd(v: Vec<f64>) -> VelocityCommand {
        VelocityCommand {
            qd_cmd: v,
            seq: 1,
            send_tick: 0,
        }
    }

    fn one_joint(vel: f64) -> ArmDescription {
        ArmDescription::new(
            vec![DhRow::new(1.0, 0.0, 0.0, 0.0)],
            vec![vel],
            vec![-1.0],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn planar2_fk_straight_and_rotated() {
        let arm = ArmDescription::planar2();
        let p = arm.forward_kinematics(&[0.0, 0.0]).unwrap().position;
        assert!((p - Vector3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
        let p = arm.forward_kinematics(&[FRAC_PI_2, 0.0]).unwrap().position;
        assert!((p - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn planar2_jacobian_first_column_is_full_reach() {
        let arm = ArmDescription::planar2();
        let j = arm.jacobian(&[0.0, 0.0]).unwrap();
        let col: Vector3<f64> = j.fixed_view::<3, 1>(0, 0).into_owned();
        assert!((col - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pure_translation_chain_sums_offsets() {
        let rows = vec![
            DhRow::new(0.3, 0.0, 0.1, 0.0),
            DhRow::new(0.25, 0.0, -0.05, 0.0),
            DhRow::new(0.5, 0.0, 0.2, 0.0),
        ];
        let arm = ArmDescription::new(rows, vec![1.0; 3], vec![-3.0; 3], vec![3.0; 3]).unwrap();
        let p = arm.forward_kinematics(&[0.0; 3]).unwrap().position;
        assert_eq!(p, Vector3::new(0.3 + 0.25 + 0.5, 0.0, 0.1 - 0.05 + 0.2));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let arm = ArmDescription::planar2();
        assert!(matches!(
            arm.forward_kinematics(&[0.0]),
            Err(ConfigError::DimensionMismatch { expected: 2, found: 1, .. })
        ));
        assert!(arm.jacobian(&[0.0, 0.0, 0.0]).is_err());
        assert!(arm.forward_kinematics(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn rejects_bad_descriptions() {
        assert!(ArmDescription::new(vec![], vec![], vec![], vec![]).is_err());
        let row = vec![DhRow::new(1.0, 0.0, 0.0, 0.0)];
        assert!(ArmDescription::new(row.clone(), vec![0.0], vec![-1.0], vec![1.0]).is_err());
        assert!(ArmDescription::new(row.clone(), vec![1.0], vec![1.0], vec![1.0]).is_err());
        assert!(ArmDescription::new(row, vec![1.0, 2.0], vec![-1.0], vec![1.0]).is_err());
    }

    #[test]
    fn plant_integrates_constant_velocity() {
        let arm = one_joint(2.0);
        let s = JointState::at_rest(vec![0.0]);
        let next = plant_step(&arm, &s, &cmd(vec![1.0]), 0.01, 10).unwrap();
        assert!((next.q[0] - 0.01).abs() < 1e-15);
        assert_eq!(next.qd, vec![1.0]);
        assert_eq!(next.tick, 1);
    }

    #[test]
    fn plant_clamps_velocity() {
        let arm = one_joint(2.0);
        let s = JointState::at_rest(vec![0.0]);
        let next = plant_step(&arm, &s, &cmd(vec![5.0]), 0.01, 10).unwrap();
        assert!((next.q[0] - 0.02).abs() < 1e-15);
        assert_eq!(next.qd, vec![2.0]);
    }

    #[test]
    fn plant_zero_command_is_identity() {
        let arm = ArmDescription::planar2();
        let s = JointState {
            q: vec![0.3, -0.7],
            qd: vec![0.0, 0.0],
            tick: 41,
        };
        let next = plant_step(&arm, &s, &cmd(vec![0.0, 0.0]), 0.01, 10).unwrap();
        assert_eq!(next.q, s.q);
        assert_eq!(next.tick, 42);
    }

    #[test]
    fn plant_stops_at_position_limit() {
        let arm = one_joint(2.0);
        let s = JointState::at_rest(vec![0.995]);
        let next = plant_step(&arm, &s, &cmd(vec![2.0]), 0.01, 10).unwrap();
        assert_eq!(next.q, vec![1.0]);
        assert_eq!(next.qd, vec![0.0]);
        // moving away from the limit is allowed
        let back = plant_step(&arm, &next, &cmd(vec![-1.0]), 0.01, 10).unwrap();
        assert!(back.q[0] < 1.0);
    }

    #[test]
    fn plant_rejects_non_finite_command() {
        let arm = one_joint(2.0);
        let s = JointState::at_rest(vec![0.0]);
        assert_eq!(
            plant_step(&arm, &s, &cmd(vec![f64::NAN]), 0.01, 10),
            Err(PlantError::NonFiniteCommand { joint: 0, tick: 0 })
        );
        assert!(plant_step(&arm, &s, &cmd(vec![0.0]), 0.0, 10).is_err());
        assert!(plant_step(&arm, &s, &cmd(vec![0.0]), 0.01, 0).is_err());
    }
}
