use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shape problems: length mismatches, too-short curves, empty inputs.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("empty window: no design point within distance {radius} of target {target}")]
    EmptyWindow { target: String, radius: f64 },

    #[error("degenerate distance grid: all pairwise distances are zero")]
    DegenerateGrid,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("order beyond sample: floor(m * alpha) = 0 for m = {m}, alpha = {alpha}; use the extrapolated estimator")]
    OrderBeyondSample { m: usize, alpha: f64 },

    #[error("not an extrapolation: alpha = {alpha} exceeds k/m = {beta}; use the order-statistic estimator")]
    NotExtrapolation { alpha: f64, beta: f64 },

    #[error("selection error: {0}")]
    Selection(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
