use std::process::ExitCode;

use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<hdcg_core::DataError> for CliError {
    fn from(e: hdcg_core::DataError) -> Self {
        match e {
            hdcg_core::DataError::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<hdcg_model::ModelError> for CliError {
    fn from(e: hdcg_model::ModelError) -> Self {
        use hdcg_model::ModelError as M;
        match e {
            M::Config(m) => CliError::Config(m),
            M::Data(d) => d.into(),
            M::Checkpoint(_) | M::Io(_) => CliError::Data(e.to_string()),
            M::Shape(_) | M::NonFinite { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<hdcg_baselines::BaselineError> for CliError {
    fn from(e: hdcg_baselines::BaselineError) -> Self {
        use hdcg_baselines::BaselineError as B;
        match e {
            B::Param(_) | B::UnknownMethod(_) | B::ParamFile(_) => CliError::Config(e.to_string()),
            B::Io(_) | B::Data(_) => CliError::Data(e.to_string()),
            B::TooSmall(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<hdcg_metrics::MetricError> for CliError {
    fn from(e: hdcg_metrics::MetricError) -> Self {
        use hdcg_metrics::MetricError as M;
        match e {
            M::Param(_) => CliError::Config(e.to_string()),
            M::Io(_) | M::Data(_) => CliError::Data(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<hdcg_inspection::InspectionError> for CliError {
    fn from(e: hdcg_inspection::InspectionError) -> Self {
        use hdcg_inspection::InspectionError as I;
        match e {
            I::UnknownLayer { .. } | I::Param(_) => CliError::Config(e.to_string()),
            I::Model(m) => m.into(),
            I::Data(d) => d.into(),
            I::Io(_) | I::Image(_) | I::Csv(_) => CliError::Data(e.to_string()),
            I::Shape(_) | I::InsufficientStructure { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::Config(String::new()).code(), 2);
        assert_eq!(CliError::Data(String::new()).code(), 3);
        assert_eq!(CliError::Runtime(String::new()).code(), 4);
        let e: CliError = hdcg_core::DataError::Config("x".into()).into();
        assert_eq!(e.code(), 2);
    }
}
