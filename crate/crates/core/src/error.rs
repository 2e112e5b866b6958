use thiserror::Error;

/// Errors raised by the discretization, observation and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mesh needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("basis index {index} out of range for a mesh with {n_nodes} nodes")]
    IndexOutOfRange { index: usize, n_nodes: usize },
    #[error("coordinate {0} lies outside [0, 1]")]
    CoordinateOutOfRange(f64),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("linear solve failed (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("step {step} (t = {t}): {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize, t: f64) -> Self {
        Error::Step {
            step,
            t,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::NonFinite(_) => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
