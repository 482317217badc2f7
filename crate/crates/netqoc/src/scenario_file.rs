//! Scenario files: flat `key = value` text with dotted nested keys.
//!
//! ```text
//! arm = ur5
//! duration = 10
//! trajectory.space = cartesian
//! trajectory.start = 0, -1.2, 1.5, -1.9, -1.5708, 0
//! trajectory.points = 0.1, 0.3, 0.4; 0.1, 0.45, 0.4
//! trajectory.speed = 0.1
//! cmd_channel.kind = queue
//! cmd_channel.queue_len = 5
//! ```
//!
//! Relative `arm` and `trace_path` values are resolved against the
//! directory of the scenario file.

use std::path::{Path, PathBuf};

use netqoc_core::channel::{GoodBadParams, JitterParams, TraceParams};
use netqoc_core::{
    ChannelConfig, ChannelKind, ConfigError, HoldPolicy, PidGains, ScenarioConfig, TrajectorySpec,
    WaypointList, WaypointSpace,
};

use crate::arm_file::resolve_arm;
use crate::error::{Error, Result};
use crate::kv::{parse_list, FormatError, KvFile};
use crate::trace_file::load_trace;

/// Default message size assumed by the good/bad link (bits).
pub const DEFAULT_MSG_SIZE_BITS: f64 = 1024.0;

struct Reader<'a> {
    kv: KvFile,
    path: &'a Path,
    base_dir: PathBuf,
}

impl Reader<'_> {
    fn format(&self, source: FormatError) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            source,
        }
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let r = self.kv.take(key);
        r.map_err(|e| self.format(e))
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let r = self.kv.require(key);
        r.map_err(|e| self.format(e))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let r = self.kv.take_list(key);
        r.map_err(|e| self.format(e))
    }

    fn invalid(&self, key: &str, line: usize, message: impl Into<String>) -> Error {
        self.format(FormatError::InvalidValue {
            key: key.to_string(),
            line,
            message: message.into(),
        })
    }

    fn gains(&mut self, n: usize) -> Result<PidGains> {
        let mut gains = PidGains::default_for(n);
        for (key, slot) in [
            ("gains.kp", &mut gains.kp),
            ("gains.ki", &mut gains.ki),
            ("gains.kd", &mut gains.kd),
            ("gains.i_clamp", &mut gains.i_clamp),
        ] {
            let line = self.kv.take_raw(key);
            let Some((value, line)) = line else { continue };
            let values = parse_list(&value).map_err(|m| self.invalid(key, line, m))?;
            *slot = match values.len() {
                1 => vec![values[0]; n],
                len if len == n => values,
                len => {
                    return Err(self.invalid(key, line, format!("expected 1 or {n} values, found {len}")))
                }
            };
        }
        Ok(gains)
    }

    fn channel(&mut self, prefix: &str) -> Result<ChannelConfig> {
        let key = |field: &str| format!("{prefix}.{field}");
        let (kind, kind_line) = self
            .kv
            .take_raw(&key("kind"))
            .unwrap_or_else(|| ("zero".to_string(), 0));
        let kind = match kind.as_str() {
            "zero" => ChannelKind::Zero,
            "queue" => ChannelKind::Queue {
                queue_len: self.require(&key("queue_len"))?,
            },
            "jitter" => ChannelKind::Jitter(JitterParams {
                base_delay: self.require(&key("base_delay"))?,
                jitter_sigma: self.take(&key("jitter_sigma"))?.unwrap_or(0.0),
                loss_prob: self.take(&key("loss_prob"))?.unwrap_or(0.0),
                allow_reorder: self.take(&key("allow_reorder"))?.unwrap_or(false),
            }),
            "goodbad" => {
                let d = GoodBadParams::mini_maxwell(DEFAULT_MSG_SIZE_BITS);
                ChannelKind::GoodBad(GoodBadParams {
                    good_rate: self.take(&key("good_rate"))?.unwrap_or(d.good_rate),
                    bad_rate: self.take(&key("bad_rate"))?.unwrap_or(d.bad_rate),
                    good_delay: self.take(&key("good_delay"))?.unwrap_or(d.good_delay),
                    bad_delay: self.take(&key("bad_delay"))?.unwrap_or(d.bad_delay),
                    period: self.take(&key("period"))?.unwrap_or(d.period),
                    msg_size: self.take(&key("msg_size"))?.unwrap_or(d.msg_size),
                })
            }
            "trace" => {
                let rel: String = self.require(&key("trace_path"))?;
                ChannelKind::Trace(TraceParams {
                    trace: load_trace(&self.base_dir.join(rel))?,
                    base_delay: self.take(&key("base_delay"))?.unwrap_or(0.0),
                })
            }
            other => {
                return Err(self.invalid(
                    &key("kind"),
                    kind_line,
                    format!("unknown channel kind `{other}` (zero, queue, jitter, goodbad, trace)"),
                ))
            }
        };
        Ok(ChannelConfig {
            kind,
            seed: self.take(&key("seed"))?,
        })
    }
}

fn parse_points(value: &str) -> Result<Vec<Vec<f64>>, String> {
    value
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_list)
        .collect()
}

fn parse_hold_policy(value: &str) -> Option<HoldPolicy> {
    if value == "hold-last" {
        return Some(HoldPolicy::HoldLast);
    }
    let inner = value.strip_prefix("zero-after(")?.strip_suffix(')')?;
    inner.trim().parse().ok().map(HoldPolicy::ZeroAfter)
}

/// Parse scenario text. `path` is used for messages and to resolve
/// relative file references.
pub fn parse_scenario(text: &str, path: &Path) -> Result<ScenarioConfig> {
    let kv = KvFile::parse(text).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut r = Reader { kv, path, base_dir };

    let arm_spec: String = r.require("arm")?;
    let arm = resolve_arm(&arm_spec, &r.base_dir)?;
    let n = arm.n_joints();

    let (space_raw, space_line) = r
        .kv
        .take_raw("trajectory.space")
        .ok_or_else(|| r.format(FormatError::Missing { key: "trajectory.space".into() }))?;
    let space = match space_raw.as_str() {
        "cartesian" => WaypointSpace::Cartesian,
        "joint" => WaypointSpace::Joint,
        other => {
            return Err(r.invalid(
                "trajectory.space",
                space_line,
                format!("`{other}` is neither cartesian nor joint"),
            ))
        }
    };
    let q_start = r
        .list("trajectory.start")?
        .ok_or_else(|| r.format(FormatError::Missing { key: "trajectory.start".into() }))?;
    let (points_raw, points_line) = r
        .kv
        .take_raw("trajectory.points")
        .ok_or_else(|| r.format(FormatError::Missing { key: "trajectory.points".into() }))?;
    let points = parse_points(&points_raw).map_err(|m| r.invalid("trajectory.points", points_line, m))?;
    let waypoints = WaypointList::new(space, points)
        .map_err(|e| r.invalid("trajectory.points", points_line, e.to_string()))?;
    let mut trajectory = TrajectorySpec::new(q_start, waypoints, r.require("trajectory.speed")?);
    if let Some(damping) = r.take("trajectory.damping")? {
        trajectory.damping = damping;
    }

    let mut config = ScenarioConfig::new(arm, trajectory);
    config.duration = r.require("duration")?;
    if let Some(v) = r.take("tick_hz")? {
        config.tick_hz = v;
    }
    if let Some(v) = r.take("plant_substeps")? {
        config.plant_substeps = v;
    }
    if let Some(v) = r.take("seed")? {
        config.seed = v;
    }
    if let Some(v) = r.take("divergence_threshold")? {
        config.divergence_threshold = v;
    }
    if let Some((value, line)) = r.kv.take_raw("hold_policy") {
        config.hold_policy = parse_hold_policy(&value).ok_or_else(|| {
            r.invalid("hold_policy", line, format!("`{value}`: expected hold-last or zero-after(<seconds>)"))
        })?;
    }
    config.gains = r.gains(n)?;
    config.cmd_channel = r.channel("cmd_channel")?;
    config.status_channel = r.channel("status_channel")?;

    let path_buf = path.to_path_buf();
    r.kv.finish().map_err(|source| Error::Format {
        path: path_buf.clone(),
        source,
    })?;
    config.validate().map_err(|source: ConfigError| Error::Config {
        path: path_buf,
        source,
    })?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
arm = planar2
duration = 3
trajectory.space = joint
trajectory.start = 0, 0
trajectory.points = 0, 0; 0.5, -0.5
trajectory.speed = 0.5
";

    fn parse(text: &str) -> Result<ScenarioConfig> {
        parse_scenario(text, Path::new("inline.scn"))
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.tick_hz, 100.0);
        assert_eq!(cfg.plant_substeps, 10);
        assert_eq!(cfg.cmd_channel, ChannelConfig::zero());
        assert_eq!(cfg.hold_policy, HoldPolicy::HoldLast);
        assert_eq!(cfg.gains, PidGains::default_for(2));
        assert_eq!(cfg.trajectory.waypoints.points().len(), 2);
    }

    #[test]
    fn channels_and_options() {
        let text = format!(
            "{MINIMAL}cmd_channel.kind = queue\ncmd_channel.queue_len = 5\n\
             status_channel.kind = jitter\nstatus_channel.base_delay = 0.02\n\
             status_channel.loss_prob = 0.1\nstatus_channel.seed = 9\n\
             hold_policy = zero-after(0.25)\ngains.kp = 4, 5\ngains.kd = 0\n"
        );
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.cmd_channel, ChannelConfig::queue(5));
        let ChannelKind::Jitter(j) = cfg.status_channel.kind else { panic!() };
        assert_eq!((j.base_delay, j.loss_prob, j.allow_reorder), (0.02, 0.1, false));
        assert_eq!(cfg.status_channel.seed, Some(9));
        assert_eq!(cfg.hold_policy, HoldPolicy::ZeroAfter(0.25));
        assert_eq!(cfg.gains.kp, vec![4.0, 5.0]);
        assert_eq!(cfg.gains.kd, vec![0.0, 0.0]);
    }

    #[test]
    fn bad_key_names_key_and_line() {
        let text = format!("{MINIMAL}cmd_channel.queue_len = 3\n");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 7") && err.contains("cmd_channel.queue_len"), "{err}");
    }

    #[test]
    fn invalid_values() {
        for bad in [
            MINIMAL.replace("joint\n", "polar\n"),
            MINIMAL.replace("duration = 3", "duration = -1"),
            format!("{MINIMAL}hold_policy = sometimes\n"),
            format!("{MINIMAL}gains.kp = 1, 2, 3\n"),
            format!("{MINIMAL}cmd_channel.kind = carrier-pigeon\n"),
            MINIMAL.replace("arm = planar2\n", ""),
        ] {
            assert!(parse(&bad).is_err(), "{bad}");
        }
    }
}
