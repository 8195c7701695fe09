use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate curve at theta0 = {theta0}, t = {t}: |y_theta| = {speed:e}")]
    DegenerateCurve { theta0: f64, t: f64, speed: f64 },

    #[error("band self-intersects at theta0 = {theta0}, t = {t}, r = {r}: J = {jacobian:e}")]
    SelfIntersection {
        theta0: f64,
        t: f64,
        r: f64,
        jacobian: f64,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("expression `{source_text}`: {message}")]
    Expression { source_text: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "Picard iteration did not converge at t = {t} after {} iterations (last relative update {:e})",
        history.len(),
        history.last().copied().unwrap_or(f64::NAN)
    )]
    PicardDivergence { t: f64, history: Vec<f64> },

    #[error("singular linear system: zero pivot in column {column}")]
    Singular { column: usize },

    #[error("incompatible grids: {0}")]
    Grid(String),

    #[error("misaligned snapshots: {0}")]
    Misaligned(String),

    #[error("frame validation failed: {0}")]
    Validation(String),

    #[error("radial oracle refused: {0}")]
    NotRadial(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Configuration and input problems, as opposed to failures inside a solve.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Scenario(_)
                | Error::Expression { .. }
                | Error::Config(_)
                | Error::Grid(_)
                | Error::NotRadial(_)
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}
