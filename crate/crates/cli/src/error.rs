use std::path::Path;

use gpk::catalog::CatalogError;
use gpk::logic::LogicError;
use gpk::recurrence::RecurrenceError;
use gpk::structures::{GraphFormatError, StructureError};
use gpk::synthesis::SynthesisError;
use gpk::translation::TranslationError;

/// Exit codes.
pub const PASS: u8 = 0;
pub const USAGE: u8 = 1;
pub const INFEASIBLE: u8 = 2;
pub const BUDGET: u8 = 3;
pub const MISMATCH: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Budget(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => USAGE,
            CliError::Infeasible(_) => INFEASIBLE,
            CliError::Budget(_) => BUDGET,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Budget(m) => m,
        }
    }
}

impl From<RecurrenceError> for CliError {
    fn from(e: RecurrenceError) -> Self {
        match e {
            RecurrenceError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            RecurrenceError::Budget(_) => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Recurrence(r) => r.into(),
            SynthesisError::Budget(_) | SynthesisError::TooManyColorings(..) => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::Recurrence(r) => r.into(),
            CatalogError::Synthesis(s) => s.into(),
            CatalogError::Budget(_) => CliError::Budget(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        })*
    };
}

usage_from!(GraphFormatError, StructureError, LogicError, TranslationError);
