use serde::Serialize;

/// Failures of a CLI run. Each maps to an exit code and a machine-readable
/// JSON body.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] contact_gap::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Format { what: String, message: String },
}

/// JSON body printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replica: Option<usize>,
    pub exit_code: i32,
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn format(what: impl Into<String>, message: impl ToString) -> Self {
        CliError::Format {
            what: what.into(),
            message: message.to_string(),
        }
    }

    /// Error kind and replica index, looking through replica wrappers.
    fn classify(&self) -> (&'static str, Option<usize>) {
        use contact_gap::Error as E;
        match self {
            CliError::UnknownExperiment(_) => ("unknown-experiment", None),
            CliError::Config(_) => ("invalid-config", None),
            CliError::Io { .. } => ("io", None),
            CliError::Format { .. } => ("malformed-input", None),
            CliError::Core(e) => {
                let (inner, replica) = match e {
                    E::Replica { replica, source } => (source.as_ref(), Some(*replica)),
                    e => (e, None),
                };
                let kind = match inner {
                    E::LightCone { .. } => "light-cone",
                    E::InvalidParameter(_) | E::InvalidGeometry(_) | E::GeometryMismatch(_) | E::OutsideWindow(_) => {
                        "invalid-config"
                    }
                    E::StateCap { .. } => "state-cap",
                    E::TooFewSurvivors { .. } => "too-few-survivors",
                    E::InsufficientPoints { .. } => "insufficient-points",
                    _ => "numerical",
                };
                (kind, replica)
            }
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.classify().0 {
            "unknown-experiment" | "invalid-config" | "malformed-input" | "state-cap" => 2,
            "light-cone" => 3,
            "io" => 4,
            _ => 5,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, replica) = self.classify();
        ErrorReport {
            kind,
            message: self.to_string(),
            replica,
            exit_code: self.exit_code(),
        }
    }
}
