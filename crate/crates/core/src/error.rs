use thiserror::Error;

/// Errors raised by the simulation, recovery and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state or parameter falls outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integration step failed; `time` is the stage time at which the vector field was rejected.
    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    /// Parameter recovery attempted where the outputs carry no information (Q = 0 or I = 0).
    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("root selection failed: {0}")]
    RootSelection(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Data are inconsistent with the sign structure the recovery relies on.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input series too short: covers [0, {covered}] but horizon is {horizon}")]
    InputTooShort { covered: f64, horizon: f64 },

    #[error("measurement guard: {0}")]
    MeasurementGuard(String),

    #[error("observer diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Innermost error, skipping time annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
