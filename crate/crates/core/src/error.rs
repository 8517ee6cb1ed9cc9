use thiserror::Error;

/// Errors raised by the tube computations.
///
/// Variants split into two families: validation problems with the inputs
/// (bad parameters, malformed configs, energies on excluded sets) and
/// numerical failures (accuracy estimates or iterations that did not meet
/// their tolerance). The CLI maps the first family to exit code 1 and the
/// second to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tube parameters: {0}")]
    Parameters(String),

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lambda = {lambda} lies in the Dirichlet spectrum of {edge}")]
    DirichletSpectrum { lambda: f64, edge: String },

    #[error("lambda = {lambda} is a band edge; Jordan blocks are not supported")]
    BandEdge { lambda: f64 },

    #[error("mode classification failed: {0}")]
    Classification(String),

    #[error("infeasible bound-state design: {0}")]
    Infeasible(String),

    #[error("model too large: {0}")]
    Size(String),

    #[error("edge integration error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("singular column stencil at lambda = {lambda}")]
    DegenerateStencil { lambda: f64 },

    #[error("eigensolver did not converge: {0}")]
    Convergence(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("tolerance check failed: {0}")]
    Tolerance(String),
}

impl Error {
    /// True for failures of a numerical tolerance rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. }
                | Error::DegenerateStencil { .. }
                | Error::Convergence(_)
                | Error::Internal(_)
                | Error::Tolerance(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
