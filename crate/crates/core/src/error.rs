use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible distribution model: {0}")]
    Infeasible(String),

    #[error("empty shot list")]
    NoShots,

    #[error("no shot contains two or more atoms")]
    NoPairs,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("probability vector is all zero")]
    ZeroDistribution,

    #[error("distribution is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("empty field: correlation undefined for R = 0")]
    EmptyField,

    #[error("need two atoms for coincidences (R = {0})")]
    TooFewAtoms(usize),

    #[error("inconsistent g1 samples: imaginary residue {0:e}")]
    InconsistentG1(f64),

    #[error("p2 at zero separation must vanish for single occupancy (got {0:e})")]
    NonzeroSelfPair(f64),

    #[error("asymmetric g2 profile: |g2(l) - g2(-l)| = {0:e}")]
    AsymmetricG2(f64),

    #[error("detection grid too coarse for the quadratic phase ({0:.3} rad per sample)")]
    CoarseGrid(f64),

    #[error("fringe model mismatch: relative rms residual {0:e}")]
    ModelMismatch(f64),

    #[error("run {run} failed: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("malformed shot archive at line {line}: {message}")]
    Archive { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
