use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative consumption {0}")]
    NegativeConsumption(f64),

    #[error("infeasible consumption {consumption} with assets {assets}")]
    InfeasibleConsumption { assets: f64, consumption: f64 },

    #[error("negative assets {0}")]
    NegativeAssets(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error(
        "asset grid too small: from x={x} at t={t}, consuming c={c} with y={y}, R={r} \
         reaches {next} > grid max {grid_max}"
    )]
    GridTooSmall {
        t: usize,
        x: f64,
        c: f64,
        y: f64,
        r: f64,
        next: f64,
        grid_max: f64,
    },

    #[error("time {t} outside horizon {horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },

    #[error("realization length {got} does not match horizon {expected}")]
    HorizonMismatch { expected: usize, got: usize },

    #[error("agent {index} failed: {source}")]
    Agent {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: policy consumed {consumption} with only {available} available")]
    PolicyInfeasible {
        trial: usize,
        consumption: f64,
        available: f64,
    },

    #[error("too few distinct incomes after outlier removal ({0})")]
    TooFewIncomes(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than
    /// numerics or feasibility.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidDistribution(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
