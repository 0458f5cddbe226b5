//! Error types shared across the crate.

use thiserror::Error;

/// Top-level error for all library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("scenario validation failed:\n{}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),

    #[error("path enumeration truncated at cap {cap} for target {target}")]
    PathsTruncated { target: String, cap: usize },

    #[error("target {0} is unreachable from the source")]
    Unreachable(String),

    #[error("unknown node id: {0}")]
    UnknownNode(String),

    #[error("unknown defender id: {0}")]
    UnknownDefender(String),

    #[error("infeasible investment profile: {0}")]
    Infeasible(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("no verified equilibria available: {0}")]
    NoEquilibria(String),

    #[error("scenario file version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// One structured validation finding.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, message: message.into() }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into() }
    }
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| match d.severity {
            Severity::Error => format!("  error: {}", d.message),
            Severity::Warning => format!("  warning: {}", d.message),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
