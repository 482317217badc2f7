//! KPI summary files in the same `key = value` format as the inputs.

use std::fmt::Write as _;

use netqoc_core::{KpiReport, RunOutcome, SweepPoint};

use crate::csv_out::fmt_f64;

#[derive(Debug, Default, Clone)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entry(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.text, "{key} = {value}").expect("write to String");
    }

    pub fn number(&mut self, key: &str, value: f64) {
        self.entry(key, fmt_f64(value));
    }

    pub fn comment(&mut self, text: &str) {
        writeln!(self.text, "# {text}").expect("write to String");
    }

    /// KPI scalars of one run, keys prefixed with `prefix`.
    pub fn report(&mut self, prefix: &str, outcome: &RunOutcome, report: &KpiReport) {
        let key = |k: &str| format!("{prefix}{k}");
        self.entry(&key("ticks"), outcome.log.len());
        self.number(&key("cum_pid_error"), report.cum_pid_error.total);
        self.number(&key("cum_joint_dev"), report.cum_joint_dev.total);
        if let Some(v) = &report.cum_vel_diff {
            self.number(&key("cum_vel_diff"), v.cumulative.total);
            self.entry(&key("cum_vel_diff_truncated"), v.truncated);
        }
        self.number(&key("cartesian_dev_mean"), report.cartesian.mean);
        self.number(&key("cartesian_dev_max"), report.cartesian.max);
        self.entry(&key("diverged"), report.diverged() || outcome.diverged());
        let tick = outcome
            .divergence
            .as_ref()
            .map(|d| d.tick())
            .or(report.diverged_at);
        match tick {
            Some(t) => self.entry(&key("divergence_tick"), t),
            None => self.entry(&key("divergence_tick"), "none"),
        }
        for (dir, stats) in [("cmd", outcome.cmd_stats), ("status", outcome.status_stats)] {
            self.entry(&key(&format!("{dir}_pushed")), stats.pushed);
            self.entry(&key(&format!("{dir}_delivered")), stats.delivered);
            self.entry(&key(&format!("{dir}_lost")), stats.lost);
        }
    }

    pub fn sweep(&mut self, points: &[SweepPoint]) {
        self.entry("points", points.len());
        for (i, p) in points.iter().enumerate() {
            let prefix = format!("point.{i}.");
            self.entry(&format!("{prefix}latency_s"), p.latency);
            match &p.result {
                Ok((outcome, report)) => {
                    let status = if outcome.diverged() || report.diverged() { "diverged" } else { "ok" };
                    self.entry(&format!("{prefix}status"), status);
                    self.report(&prefix, outcome, report);
                }
                Err(e) => {
                    self.entry(&format!("{prefix}status"), "error");
                    self.entry(&format!("{prefix}error"), e.to_string().replace('\n', " "));
                }
            }
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}
