//! Campaign orchestration, outputs, replay and reporting.

mod campaign;
pub mod config;
mod metrics;
mod replay;
mod report;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use campaign::{run_campaign, Campaign, ProvenanceRecord};
pub use config::{CampaignConfig, LlmSettings, MockChoice, SelectMode, SolverMode};
pub use metrics::Metrics;
pub use replay::{audit, read_provenance, replay, AuditReport, ReplayReport};
pub use report::{report, Report};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn malformed(path: &Path, message: impl ToString) -> Self {
        HarnessError::Malformed {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

/// File names inside an output directory.
pub mod files {
    pub const ECT: &str = "ect.json";
    pub const SELECTION_LOG: &str = "selection.log";
    pub const LLM_LOG: &str = "llm.log";
    pub const METRICS: &str = "metrics.jsonl";
    pub const SUMMARY: &str = "summary.json";
    pub const PROVENANCE: &str = "provenance.jsonl";
    pub const CORPUS: &str = "corpus";
}
