use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("non-finite integrand at node {node}: {value}")]
    NonFinite { node: usize, value: String },

    #[error("transmission system at degree {degree} is singular (condition estimate {condition:.3e})")]
    Conditioning { degree: usize, condition: f64 },

    #[error("series solution not converged: tail ratio {tail:.3e} at truncation order {order}")]
    NotConverged { order: usize, tail: f64 },

    #[error("self-consistent strengths did not converge in {iterations} iterations (last residual {last:.3e})", last = residuals.last().copied().unwrap_or(f64::NAN))]
    Divergence { iterations: usize, residuals: Vec<f64> },

    #[error("scatterer {index}: {source}")]
    Scatterer {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn for_scatterer(self, index: usize) -> Self {
        Error::Scatterer {
            index,
            source: Box::new(self),
        }
    }

    /// True for failures caused by numerical non-convergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotConverged { .. }
            | Error::Divergence { .. }
            | Error::Conditioning { .. }
            | Error::Overflow(_)
            | Error::NonFinite { .. } => true,
            Error::Scatterer { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
