use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error(
        "unsupported partial order (θ-order {theta}, S-order {state}); total order must be ≤ 2"
    )]
    UnsupportedOrder { theta: u32, state: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A simulated state became non-finite. `step` is the index of the step
    /// being taken (0 for the transition out of the initial state).
    #[error("divergence at step {step}{}", path.map(|p| format!(" on path {p}")).unwrap_or_default())]
    Divergence { step: usize, path: Option<u64> },

    #[error("insufficient data: {usable} usable records, at least 3 required")]
    InsufficientData { usable: usize },

    #[error("lemma instance support too large: {size} outcomes (limit 1000000)")]
    TooLarge { size: u128 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn on_path(self, path: u64) -> Self {
        match self {
            Error::Divergence { step, .. } => Error::Divergence {
                step,
                path: Some(path),
            },
            other => other,
        }
    }
}
