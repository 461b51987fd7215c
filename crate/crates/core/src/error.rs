use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported truncation depth {0} (supported: at most 3)")]
    UnsupportedDepth(usize),
    #[error("cannot parse forest {input:?} at byte {pos}: {msg}")]
    Parse {
        input: String,
        pos: usize,
        msg: String,
    },
    #[error("unknown tree in intensities: {0}")]
    UnknownTree(String),
    #[error("letter {0} is not in the alphabet")]
    UnknownLetter(String),
    #[error("forest {forest} has degree {degree} above truncation {depth}")]
    DegreeTooHigh {
        forest: String,
        degree: usize,
        depth: usize,
    },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid interval: {0}")]
    Interval(String),
    #[error("mesh not nested in grid: {0}")]
    Mesh(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("expected a tree, got {0}")]
    NotATree(String),
    #[error("missing data: {0}")]
    Missing(String),
    #[error("divergence at t = {time}: |Y| = {norm:e} exceeds {bound:e}")]
    Divergence { time: f64, norm: f64, bound: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
