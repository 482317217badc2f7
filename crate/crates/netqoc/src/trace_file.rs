//! Delay traces exported by an external network simulator: one
//! `seq delay_ms` pair per line, `#` comments allowed.

use std::path::Path;

use netqoc_core::DelayTrace;

use crate::error::{Error, Result};
use crate::kv::{strip_comment, FormatError};

pub fn parse_trace(text: &str) -> Result<DelayTrace, FormatError> {
    let mut trace = DelayTrace::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| FormatError::Syntax { line, message };
        let mut fields = content.split_whitespace();
        let (Some(seq), Some(delay), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(syntax(format!("expected `seq delay_ms`, found `{content}`")));
        };
        let seq: u64 = seq
            .parse()
            .map_err(|e| syntax(format!("bad sequence number `{seq}`: {e}")))?;
        let delay_ms: f64 = delay
            .parse()
            .map_err(|e| syntax(format!("bad delay `{delay}`: {e}")))?;
        trace
            .insert(seq, delay_ms)
            .map_err(|_| syntax(format!("delay `{delay}` must be a non-negative number")))?;
    }
    Ok(trace)
}

pub fn load_trace(path: &Path) -> Result<DelayTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}
