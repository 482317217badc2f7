//! Flat `key = value` text files with `#` comments.
//!
//! Readers take keys out of a [`KvFile`] one by one; whatever is left over
//! afterwards is reported as an unknown key with its line number.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue {
        key: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<String, Entry>,
}

pub(crate) fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(before, _)| before).trim()
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw);
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(FormatError::Syntax {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(FormatError::Syntax {
                    line,
                    message: format!("invalid key `{key}`"),
                });
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(FormatError::DuplicateKey {
                    key: key.to_string(),
                    line,
                });
            }
        }
        Ok(KvFile { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Remove `key`, returning its raw value and line.
    pub fn take_raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, FormatError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((value, line)) = self.take_raw(key) else {
            return Ok(None);
        };
        value
            .parse::<T>()
            .map(Some)
            .map_err(|e| FormatError::InvalidValue {
                key: key.to_string(),
                line,
                message: format!("`{value}`: {e}"),
            })
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T, FormatError>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)?.ok_or_else(|| FormatError::Missing {
            key: key.to_string(),
        })
    }

    /// Comma-separated list of numbers.
    pub fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, FormatError> {
        let Some((value, line)) = self.take_raw(key) else {
            return Ok(None);
        };
        parse_list(&value)
            .map(Some)
            .map_err(|message| FormatError::InvalidValue {
                key: key.to_string(),
                line,
                message,
            })
    }

    /// Report the first key nobody consumed.
    pub fn finish(self) -> Result<(), FormatError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, e)) => Err(FormatError::UnknownKey { key, line: e.line }),
        }
    }
}

pub(crate) fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<f64>()
                .map_err(|e| format!("`{item}` is not a number: {e}"))
        })
        .collect()
}
