use thiserror::Error;

use crate::minimizer::SolveReport;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Non-finite input or an argument outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid problem/grid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input to a post-processing routine.
    #[error("input error: {0}")]
    Input(String),

    #[error("value {value} outside the admissible range {range}")]
    Range { value: f64, range: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("minimizer did not converge{} after {} iterations (gradient norm {:.3e})",
        .step.map(|s| format!(" at step {s}")).unwrap_or_default(),
        .report.iterations, .report.grad_norm)]
    NonConvergence {
        step: Option<usize>,
        report: SolveReport,
    },

    #[error("energy is not finite{}", .step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NonFiniteEnergy { step: Option<usize> },
}

impl Error {
    /// Attaches a time-step index to solver failures.
    pub(crate) fn at_step(self, n: usize) -> Self {
        match self {
            Error::NonConvergence { report, .. } => Error::NonConvergence {
                step: Some(n),
                report,
            },
            Error::NonFiniteEnergy { .. } => Error::NonFiniteEnergy { step: Some(n) },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
