use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("non-hyperbolic input: {0}")]
    NonHyperbolic(String),
    #[error("matrix mixes exact and floating-point entries")]
    MixedScalars,
    #[error("model error: {0}")]
    Model(String),
    #[error("truncation budget exceeded: {0}")]
    Truncation(String),
    #[error("catalog validation failed: {0}")]
    Validation(String),
    #[error("orbit {orbit}: {source}")]
    Orbit {
        orbit: String,
        #[source]
        source: Box<Error>,
    },
    #[error("evaluation point on an orbit length: {0}")]
    Boundary(String),
    #[error("evaluation at a zero of a factor: {0}")]
    NearZero(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("inconclusive region: {0}")]
    Inconclusive(String),
    #[error("refinement failed: {0}")]
    Refinement(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("outside function domain: {0}")]
    Domain(String),
    #[error("non-mixing catalog: {0}")]
    NonMixing(String),
    #[error("catalog format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_orbit(self, orbit: impl Into<String>) -> Self {
        Error::Orbit { orbit: orbit.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
