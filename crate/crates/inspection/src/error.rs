use thiserror::Error;

#[derive(Debug, Error)]
pub enum InspectionError {
    #[error("unknown layer {name:?}; available: {available}")]
    UnknownLayer { name: String, available: String },
    #[error("insufficient structure: found {found} curve(s) spanning at least {min_len} columns, need 2")]
    InsufficientStructure { found: usize, min_len: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Model(#[from] hdcg_model::ModelError),
    #[error(transparent)]
    Data(#[from] hdcg_core::DataError),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, InspectionError>;
