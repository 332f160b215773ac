use hdcg_core::DataError;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty {0} mask")]
    EmptyMask(&'static str),
    #[error("mask extraction failed: {0}")]
    MaskExtraction(String),
    #[error("report error: {0}")]
    Report(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("denoiser failed: {0}")]
    Denoiser(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

impl From<csv::Error> for MetricError {
    fn from(e: csv::Error) -> Self {
        MetricError::Io(std::io::Error::other(e))
    }
}

pub(crate) fn same_shape(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(MetricError::Shape(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    Ok(())
}
