//! Parameter sweeps and their outputs.

pub mod compare;
pub mod config;
pub mod output;
pub mod svg;
pub mod sweep;

use std::path::PathBuf;

use crate::error::ModelError;

pub use compare::{compare_report, CompareLine, CompareReport, FLAG_THRESHOLD};
pub use config::{parse_config, parse_config_str, Engine, SweepSpec};
pub use output::{emit_csv, read_csv, write_csv};
pub use svg::{emit_svg, render_svg, PlotKind};
pub use sweep::{run_sweep, RowEngine, SimColumns, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{key}: {reason}")]
    Config { key: String, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: ModelError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0} row(s) exceed the comparison threshold")]
    StrictFailure(usize),
}

impl HarnessError {
    /// 1 for invalid input, 2 for runtime failures, 3 for a failed strict
    /// comparison.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Parse(_) | HarnessError::Input(_) => 1,
            HarnessError::Model { source, .. } => match source {
                ModelError::InvalidParameter { .. } => 1,
                _ => 2,
            },
            HarnessError::Io { .. } | HarnessError::Csv { .. } => 2,
            HarnessError::StrictFailure(_) => 3,
        }
    }
}
