use thiserror::Error;

/// Errors surfaced by the generation, extraction, and statistics pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("placement error: achieved {achieved} of {target} nuclei")]
    Placement { achieved: usize, target: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
