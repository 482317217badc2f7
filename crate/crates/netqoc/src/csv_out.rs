//! Per-tick run tables and plot-ready data files.
//!
//! Floating-point cells use 17 significant digits so a table read back
//! reproduces the in-memory values exactly. Files are written to a
//! temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use netqoc_core::{RunLog, TickRecord};

use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `contents` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Rows of cells rendered as CSV text.
#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |j| format!("{prefix}_{j}"))
}

pub fn run_header(n: usize) -> Vec<String> {
    let mut h = vec!["tick".to_string(), "time_s".to_string()];
    for prefix in ["q_plan", "q_exec", "qd_cmd_sent", "qd_cmd_applied", "pid_err"] {
        h.extend(indexed(prefix, n));
    }
    h.extend(["ee_x", "ee_y", "ee_z"].map(String::from));
    h
}

fn time_of(tick: usize, dt: f64) -> f64 {
    tick as f64 * dt
}

/// The per-tick run table.
pub fn run_table(log: &RunLog, n_joints: usize) -> Table {
    let mut table = Table::new(run_header(n_joints));
    for (tick, r) in log.records.iter().enumerate() {
        let mut row = vec![tick.to_string(), fmt_f64(time_of(tick, log.dt))];
        for series in [&r.q_plan, &r.q_exec, &r.qd_cmd_sent, &r.qd_cmd_applied, &r.pid_error] {
            row.extend(series.iter().copied().map(fmt_f64));
        }
        row.extend(r.ee_position.iter().copied().map(fmt_f64));
        table.push(row);
    }
    table
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Cell { row: usize, message: String },
}

/// Read a run table back into a log (for recomputing KPIs from exported
/// data). The tick length is not stored in the table and must be given.
pub fn read_run_table(data: &[u8], dt: f64) -> Result<RunLog, ReadError> {
    let mut reader = csv::Reader::from_reader(data);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header.len() < 5 || !(header.len() - 5).is_multiple_of(5) {
        return Err(ReadError::Header(header.join(",")));
    }
    let n = (header.len() - 5) / 5;
    if header != run_header(n) {
        return Err(ReadError::Header(header.join(",")));
    }
    let mut log = RunLog::new(dt);
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let values: Vec<f64> = record
            .iter()
            .skip(2)
            .map(|c| {
                c.parse::<f64>().map_err(|e| ReadError::Cell {
                    row,
                    message: format!("`{c}`: {e}"),
                })
            })
            .collect::<Result<_, _>>()?;
        let block = |k: usize| values[k * n..(k + 1) * n].to_vec();
        log.records.push(TickRecord {
            q_plan: block(0),
            q_exec: block(1),
            qd_cmd_sent: block(2),
            qd_cmd_applied: block(3),
            pid_error: block(4),
            ee_position: [values[5 * n], values[5 * n + 1], values[5 * n + 2]],
        });
    }
    Ok(log)
}

/// Sent velocity commands against time.
pub fn velocity_table(log: &RunLog, n_joints: usize) -> Table {
    let mut header = vec!["tick".to_string(), "time_s".to_string()];
    header.extend(indexed("qd_cmd_sent", n_joints));
    let mut table = Table::new(header);
    for (tick, r) in log.records.iter().enumerate() {
        let mut row = vec![tick.to_string(), fmt_f64(time_of(tick, log.dt))];
        row.extend(r.qd_cmd_sent.iter().copied().map(fmt_f64));
        table.push(row);
    }
    table
}

/// Planned and executed end-effector positions for one run.
pub fn trajectory_table(log: &RunLog, plan_xyz: &[[f64; 3]]) -> Table {
    let header = ["tick", "time_s", "plan_x", "plan_y", "plan_z", "exec_x", "exec_y", "exec_z"]
        .map(String::from)
        .to_vec();
    let mut table = Table::new(header);
    for (tick, (r, p)) in log.records.iter().zip(plan_xyz).enumerate() {
        let mut row = vec![tick.to_string(), fmt_f64(time_of(tick, log.dt))];
        row.extend(p.iter().chain(&r.ee_position).copied().map(fmt_f64));
        table.push(row);
    }
    table
}

/// Cumulative KPI series for one run.
pub fn cumulative_table(dt: f64, columns: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["time_s".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    columns_table(dt, header, columns.iter().map(|(_, s)| *s).collect())
}

/// A time column plus one column per series; shorter series (truncated
/// diverged runs) are padded with `nan`.
pub fn columns_table(dt: f64, header: Vec<String>, series: Vec<&[f64]>) -> Table {
    let len = series.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut table = Table::new(header);
    for tick in 0..len {
        let mut row = vec![fmt_f64(time_of(tick, dt))];
        row.extend(
            series
                .iter()
                .map(|s| s.get(tick).map_or_else(|| "nan".to_string(), |v| fmt_f64(*v))),
        );
        table.push(row);
    }
    table
}
