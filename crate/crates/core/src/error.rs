use std::path::PathBuf;

/// Errors raised anywhere in the sizing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Csv {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("non-uniform spacing at line {line}: expected {expected} min, found {found} min")]
    NonUniformSpacing {
        line: u64,
        expected: i64,
        found: i64,
    },

    #[error("step mismatch: expected {expected} min, file spacing is {found} min")]
    StepMismatch { expected: u32, found: u32 },

    #[error("cannot resample: {0}")]
    Resample(String),

    #[error("series too short: need at least {needed} samples, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("invalid value for `{key}`: {msg}")]
    InvalidParam { key: String, msg: String },

    #[error("load fraction {load_fraction} is above the fuel table's last point {max}")]
    FuelTableRange { load_fraction: f64, max: f64 },

    #[error("infeasible day: forecast load cannot be served at step {step}")]
    InfeasibleDay { step: usize },

    #[error("simulation failed in year {year}, step {step}: {source}")]
    Simulation {
        year: u32,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("zero discounted energy, LCOE undefined")]
    ZeroEnergy,

    #[error("IRR undefined: cash flows never change sign")]
    IrrUndefined,

    #[error("IRR undefined: no root of NPV in (-0.99, 10]")]
    IrrNotBracketed,

    #[error("year-count mismatch: expected {expected} simulated years, found {found}")]
    YearMismatch { expected: usize, found: usize },

    #[error("sweep failed at size {size_kwh} kWh: {source}")]
    Sweep {
        size_kwh: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown sensitivity factor `{name}`; valid factors: {valid}")]
    UnknownFactor { name: String, valid: String },

    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
