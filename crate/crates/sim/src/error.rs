use std::path::PathBuf;

use thiserror::Error;

pub type SimResult<T> = Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] cecfo_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error(
        "target MSE {target:e} is below the grid quantization floor {floor:e}; \
         raise alpha or the target"
    )]
    Infeasible { target: f64, floor: f64 },
    #[error(
        "SNR bracket [{low_db}, {high_db}] dB does not straddle target {target:e} \
         (MSE {mse_low:e} at low end, {mse_high:e} at high end)"
    )]
    Bracket {
        low_db: f64,
        high_db: f64,
        mse_low: f64,
        mse_high: f64,
        target: f64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 3,
            SimError::Infeasible { .. } => 4,
            SimError::Io { .. } => 5,
            SimError::Bracket { .. } => 6,
            SimError::Core(_) | SimError::Argument(_) => 1,
        }
    }
}
