use blade_envelope::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("upstream artifact problem, rerun `{stage}`: {detail}")]
    Upstream { stage: &'static str, detail: String },
    #[error(transparent)]
    Core(#[from] Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn upstream(stage: &'static str, detail: impl Into<String>) -> Self {
        CliError::Upstream { stage, detail: detail.into() }
    }

    /// 2 config, 3 upstream artifact, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Upstream { .. } => 3,
            CliError::Core(Error::Io { .. } | Error::Format { .. } | Error::Csv(_) | Error::Json(_)) => 3,
            CliError::Core(_) => 4,
        }
    }
}
