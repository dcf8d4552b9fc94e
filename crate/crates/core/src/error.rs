use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, SfdeError>;

#[derive(Debug, thiserror::Error)]
pub enum SfdeError {
    #[error("non-finite sample at row {index}")]
    NonFiniteSample { index: usize },

    #[error("time regression: {t_new} < {t_current}")]
    TimeRegression { t_current: f64, t_new: f64 },

    #[error("kernel rate {kappa} must exceed the memory rate {rate}")]
    KernelRate { kappa: f64, rate: f64 },

    #[error("model evaluation produced a non-finite value (segment norm {norm})")]
    ModelEvaluation { norm: f64 },

    #[error("diffusion matrix is singular")]
    DiffusionSingular,

    #[error("neutral fixed point did not converge (residual {residual:e} after {iterations} iterations)")]
    NeutralIteration { residual: f64, iterations: usize },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl SfdeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SfdeError::Io { path: path.into(), source }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SfdeError::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        SfdeError::Usage(msg.into())
    }
}
