use thiserror::Error;

/// Errors raised by the sensing, planning and beamforming stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The evaluation point sits exactly on an array element (1-based index).
    #[error("point coincides with antenna element {index}")]
    SingularGeometry { index: usize },

    /// No window satisfies the minimum visibility-region size.
    #[error("no feasible window: minimum span {min_span} does not fit in {n} elements")]
    InfeasibleWindow { min_span: usize, n: usize },

    #[error("constructed channel has zero norm over the visibility region")]
    DegenerateChannel,

    #[error("reflection coefficient is unidentifiable: h^T x vanishes")]
    UnidentifiableReflection,

    #[error("channel is identically zero; the echo model carries no information")]
    SingularModel,

    /// Condition number refers to the diagonally equilibrated FIM.
    #[error("Fisher information matrix is singular (equilibrated condition number {cond:.3e})")]
    SingularFim { cond: f64 },

    /// `K * tau` leaves no symbols for energy transmission.
    #[error("sensing needs K*tau = {needed} symbols but the block has only {block_len}")]
    InfeasibleBlock { needed: u64, block_len: u64 },

    #[error("eigen solver residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotConverged { residual: f64, tolerance: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
