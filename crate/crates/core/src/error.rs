use std::path::PathBuf;

use thiserror::Error;

use crate::model::NodeId;

/// Errors raised by the simulator and its experiment harness.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("the sink is dead; topology construction is impossible")]
    SinkDead,

    #[error("failed to parse config {path}: {reason}")]
    ConfigSyntax { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run {label} failed: {reason}")]
    RunFailed { label: String, reason: String },
}

impl SimError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(reason: impl Into<String>) -> Self {
        SimError::Domain(reason.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::InvalidConfig { .. } | SimError::ConfigSyntax { .. }
        )
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
