use thiserror::Error;

/// Errors shared across the solver stack.
#[derive(Debug, Error)]
pub enum SelError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vacuum cell: rho = {rho} at cell {cell} is at or below the floor {floor}")]
    Vacuum { rho: f64, floor: f64, cell: usize },

    #[error("numerical blowup at cell {cell} (t = {t}): {what}")]
    Blowup { cell: usize, t: f64, what: String },

    #[error("Brownian path exhausted: needed increments up to t = {needed}, path ends at t = {have}")]
    PathExhausted { needed: f64, have: f64 },

    #[error("series alignment: {0}")]
    Alignment(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SelError>;
