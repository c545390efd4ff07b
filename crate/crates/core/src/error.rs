use thiserror::Error;

/// Errors produced by the rectenna model and the waveform optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("antenna index {index} out of range (M = {count})")]
    AntennaOutOfRange { index: usize, count: usize },

    #[error("receiver index {index} out of range (K = {count})")]
    ReceiverOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at least {min} samples per period required, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("PAPR is undefined for an all-zero signal")]
    UndefinedPapr,

    #[error("quadrature did not reach tolerance with {samples} samples (best estimate {best})")]
    QuadratureNotConverged { best: f64, samples: usize },

    #[error("output voltage {v_out} V outside the model domain [0, {v_max}) V")]
    VoltageOutOfDomain { v_out: f64, v_max: f64 },

    #[error("no non-negative output voltage solves the rectifier equation (ln psi = {ln_psi})")]
    NoVoltageSolution { ln_psi: f64 },

    #[error("cannot beamform on subcarrier {subcarrier}: zero channel with positive power")]
    CannotBeamform { subcarrier: usize },

    #[error("all selected effective channel gains are zero")]
    ZeroGains,

    #[error("constraint set is empty (minimum-norm feasible point has squared norm {min_norm_sq} > {radius_sq})")]
    Infeasible { min_norm_sq: f64, radius_sq: f64 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
