use hdcg_core::DataError;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("image too small: {0}")]
    TooSmall(String),
    #[error("bad parameter file: {0}")]
    ParamFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T, E = BaselineError> = std::result::Result<T, E>;

pub(crate) fn odd(name: &str, v: usize) -> Result<()> {
    if v == 0 || v % 2 == 0 {
        return Err(BaselineError::Param(format!("{name} must be odd and >= 1, got {v}")));
    }
    Ok(())
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(BaselineError::Param(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}
