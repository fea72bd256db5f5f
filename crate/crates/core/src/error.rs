use thiserror::Error;

/// Errors raised by mesh construction, solvers, the time stepper and the study harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{stage} of step {step} failed: {source}")]
    Step {
        stage: &'static str,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn at_step(self, stage: &'static str, step: usize) -> Self {
        Error::Step {
            stage,
            step,
            source: Box::new(self),
        }
    }
}
