//! File formats, CSV export, parallel sweeps and the command-line front end
//! for [`netqoc_core`].

pub mod arm_file;
pub mod cli;
pub mod csv_out;
pub mod error;
pub mod kv;
pub mod scenario_file;
pub mod summary;
pub mod sweep;
pub mod trace_file;

pub use error::{Error, Result};
pub use netqoc_core;
