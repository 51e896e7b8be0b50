use std::fmt;
use std::path::Path;

use fcmrisk_core::analytics::AnalyticsError;
use fcmrisk_core::choquet::AggregationError;
use fcmrisk_core::document::DocumentError;
use fcmrisk_core::elicitation::ElicitationError;
use fcmrisk_core::model::ModelError;
use fcmrisk_core::pipeline::PipelineError;

/// How a failure maps onto the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Inputs parse but are inconsistent (unknown ids, nothing to evaluate).
    Validation,
    /// Malformed documents, out-of-range numbers, unreadable files.
    Schema,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Validation => 1,
            Kind::Schema => 2,
        }
    }
}

/// An error tagged with the component that raised it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: Kind,
    pub source: &'static str,
    pub message: String,
    /// Input file the error concerns, if any.
    pub file: Option<String>,
}

impl CliError {
    pub fn new(kind: Kind, source: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            source,
            message: message.into(),
            file: None,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::new(Kind::Schema, "io", format!("{}: {err}", path.display()))
    }

    pub fn in_file(mut self, path: &Path) -> Self {
        self.file.get_or_insert_with(|| path.display().to_string());
        self
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}: ")?;
        }
        write!(f, "{}: {}", self.source, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let kind = match e {
            ModelError::UnknownNode(_) | ModelError::UnknownEdge { .. } => Kind::Validation,
            ModelError::InvalidPathLength => Kind::Validation,
            _ => Kind::Schema,
        };
        CliError::new(kind, "model", e.to_string())
    }
}

impl From<ElicitationError> for CliError {
    fn from(e: ElicitationError) -> Self {
        let kind = match &e {
            ElicitationError::Model(m) => return m.clone().into(),
            ElicitationError::WeightOutOfRange { .. }
            | ElicitationError::InvalidConfidence { .. }
            | ElicitationError::DuplicateEntry { .. } => Kind::Schema,
            _ => Kind::Validation,
        };
        CliError::new(kind, "elicitation", e.to_string())
    }
}

impl From<AggregationError> for CliError {
    fn from(e: AggregationError) -> Self {
        match e {
            AggregationError::Model(m) => m.into(),
            other => CliError::new(Kind::Validation, "choquet", other.to_string()),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Aggregation(a) => a.into(),
            other => CliError::new(Kind::Validation, "analytics", other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Model(e) => e.into(),
            PipelineError::Elicitation(e) => e.into(),
            PipelineError::Aggregation(e) => e.into(),
            PipelineError::Analytics(e) => e.into(),
            PipelineError::InvalidHorizon => {
                CliError::new(Kind::Validation, "pipeline", e.to_string())
            }
        }
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Json(m) => CliError::new(Kind::Schema, "document", m),
            DocumentError::Csv(m) => CliError::new(Kind::Schema, "document", m),
            DocumentError::Model(e) => e.into(),
            DocumentError::Elicitation(e) => e.into(),
        }
    }
}
