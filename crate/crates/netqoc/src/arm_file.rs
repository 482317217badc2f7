//! Arm description files and the built-in arms.

use std::path::Path;

use netqoc_core::{ArmDescription, DhRow};

use crate::error::{Error, Result};
use crate::kv::{FormatError, KvFile};

/// The bundled 6-joint arm.
pub const UR5_ARM: &str = include_str!("../arms/ur5.arm");

#[derive(Debug)]
pub enum ArmFileError {
    Format(FormatError),
    Config(netqoc_core::ConfigError),
}

impl From<FormatError> for ArmFileError {
    fn from(e: FormatError) -> Self {
        ArmFileError::Format(e)
    }
}

/// Parse the `key = value` arm format (`n_joints`, `dh.<i>.a|alpha|d|theta_offset`,
/// `vel_limit.<i>`, `pos_limit_lo.<i>`, `pos_limit_hi.<i>`).
pub fn parse_arm(text: &str) -> Result<ArmDescription, ArmFileError> {
    let mut kv = KvFile::parse(text)?;
    let n: usize = kv.require("n_joints")?;
    let mut dh = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        dh.push(DhRow::new(
            kv.require(&format!("dh.{i}.a"))?,
            kv.require(&format!("dh.{i}.alpha"))?,
            kv.require(&format!("dh.{i}.d"))?,
            kv.take(&format!("dh.{i}.theta_offset"))?.unwrap_or(0.0),
        ));
        vel.push(kv.require(&format!("vel_limit.{i}"))?);
        lo.push(kv.require(&format!("pos_limit_lo.{i}"))?);
        hi.push(kv.require(&format!("pos_limit_hi.{i}"))?);
    }
    kv.finish()?;
    ArmDescription::new(dh, vel, lo, hi).map_err(ArmFileError::Config)
}

pub fn builtin_arm(name: &str) -> Option<ArmDescription> {
    match name {
        "planar2" => Some(ArmDescription::planar2()),
        "ur5" => Some(parse_arm(UR5_ARM).expect("bundled arm file is valid")),
        _ => None,
    }
}

pub fn load_arm(path: &Path) -> Result<ArmDescription> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_arm(&text).map_err(|e| match e {
        ArmFileError::Format(source) => Error::Format {
            path: path.to_path_buf(),
            source,
        },
        ArmFileError::Config(source) => Error::Config {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// A built-in arm name, or a path resolved against `base_dir`.
pub fn resolve_arm(spec: &str, base_dir: &Path) -> Result<ArmDescription> {
    match builtin_arm(spec) {
        Some(arm) => Ok(arm),
        None => load_arm(&base_dir.join(spec)),
    }
}
