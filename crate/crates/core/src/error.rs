use thiserror::Error;

pub type Result<T> = std::result::Result<T, IstError>;

#[derive(Debug, Error)]
pub enum IstError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("unsupported transform size {0}: sample count must be a power of two")]
    UnsupportedSize(usize),

    #[error("spectral parameter {k} lies outside the analyticity domain of {which}")]
    Domain { k: String, which: String },

    #[error("negative evolution time t = {0}")]
    NegativeTime(f64),

    #[error("division hazard: {0}")]
    DivisionHazard(String),

    #[error("near-axis Cauchy evaluation: |Im z| = {0:e} is below 1e-8")]
    NearAxis(f64),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular-equation failure at x = {x}: {reason}")]
    Singular { x: f64, reason: String },

    #[error("reconstruction failed at x = {x}: {source}")]
    Reconstruction {
        x: f64,
        #[source]
        source: Box<IstError>,
    },

    #[error("phase under-resolved: 4*k_max*t*dk = {value:.4} exceeds pi/4 (k_max = {k_max}, t = {t}, dk = {dk})")]
    Aliasing {
        value: f64,
        k_max: f64,
        t: f64,
        dk: f64,
    },

    #[error("instability: {0}")]
    Instability(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IstError {
    /// True for failures of the numerics (solver breakdown, tolerance, instability)
    /// as opposed to malformed input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            IstError::DivisionHazard(_)
                | IstError::Singular { .. }
                | IstError::Reconstruction { .. }
                | IstError::Instability(_)
                | IstError::UndefinedRatio(_)
        )
    }
}
