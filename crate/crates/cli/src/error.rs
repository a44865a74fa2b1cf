use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] huca_core::Error),
    #[error("{0}")]
    Training(Box<huca_core::trainer::TrainFailure>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) => 1,
            CliError::Training(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        use huca_core::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Training(_) => "numerical_fault",
            CliError::Core(e) => match e {
                E::Parse { .. } => "parse",
                E::Alignment(_) => "alignment",
                E::Config(_) => "config",
                E::Io(_) => "io",
                E::Json(_) => "json",
                E::NumericalFault(_) => "numerical_fault",
                E::BoundaryViolation { .. } => "boundary_violation",
                E::Shape { .. } | E::SpecMismatch => "shape",
                _ => "domain",
            },
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            status: &'static str,
            kind: &'a str,
            message: String,
            exit_code: i32,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<usize>,
        }
        let line = match self {
            CliError::Core(huca_core::Error::Parse { line, .. }) => Some(*line),
            _ => None,
        };
        serde_json::to_string(&Record {
            status: "error",
            kind: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
            line,
        })
        .unwrap_or_else(|_| format!("{{\"status\":\"error\",\"exit_code\":{}}}", self.exit_code()))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<huca_core::trainer::TrainFailure> for CliError {
    fn from(f: huca_core::trainer::TrainFailure) -> Self {
        CliError::Training(Box::new(f))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}
