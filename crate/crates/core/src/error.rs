use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index range [{lo}, {hi}] not inside data range [{data_lo}, {data_hi}]")]
    Range {
        lo: i64,
        hi: i64,
        data_lo: i64,
        data_hi: i64,
    },
    #[error("singular factor at index {0}")]
    SingularFactor(i64),
    #[error("projective action undefined: input is the kernel direction")]
    UndefinedAction,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("energy too close to the truncation spectrum (distance {delta:e})")]
    IllConditioned { delta: f64 },
    #[error("cocycle product vanishes at index {0}")]
    DegenerateCocycle(i64),
    #[error("no dominated splitting: {0}")]
    NoDomination(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
