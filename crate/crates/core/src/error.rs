use thiserror::Error;

/// Errors surfaced by model construction, simulation, and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse for response sigma {sigma} (step {step}); need step < sigma/2")]
    GridTooCoarse { sigma: f64, step: f64 },

    #[error("response width {response} is not smaller than measured width {measured}")]
    ResponseExceedsMeasurement { measured: f64, response: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("empty or degenerate data: {0}")]
    DegenerateData(String),

    #[error("csv parse error at row {row}: {message}")]
    CsvParse { row: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
