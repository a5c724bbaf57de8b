use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("degenerate eigenvalues in mode {mode}: beta = {beta:e} 1/s")]
    Degenerate { mode: crate::Mode, beta: f64 },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("integration step {step:e} s exceeds {limit:e} s (tau_min/100 of mode {mode})")]
    StepTooLarge { step: f64, limit: f64, mode: crate::Mode },

    #[error("no output crossing of {target} V within {horizon:e} s")]
    NoCrossing { target: f64, horizon: f64 },

    #[error("delay computation failed at delta = {delta:e} s: {source}")]
    AtDelta {
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output still unsettled at horizon {0:e} s")]
    HorizonOverrun(f64),

    #[error("normalization impossible: inertial baseline deviation is zero")]
    ZeroBaseline,

    #[error("inertial channel required for normalization")]
    MissingBaseline,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
