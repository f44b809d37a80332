use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] lb_core::CoreError),

    #[error(transparent)]
    Meter(#[from] lb_energy::MeterError),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse config: {0}")]
    ConfigParse(String),

    #[error("oversubscription refused: {requested} workers for {available} logical cpus")]
    Oversubscribed { requested: usize, available: usize },

    #[error("numa node {node} unavailable: {detail}")]
    NumaUnavailable { node: u32, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// True when the error means "this machine cannot do that" rather than
    /// "the request was wrong" — CLI exit code 2 territory.
    pub fn is_capability(&self) -> bool {
        matches!(
            self,
            HarnessError::Meter(lb_energy::MeterError::Unavailable(_))
                | HarnessError::NumaUnavailable { .. }
        )
    }
}
