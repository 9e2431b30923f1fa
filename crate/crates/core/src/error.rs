use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The free-streaming kernel is undefined for velocities with no transport component.
    #[error("transport direction vanishes: xi1 = 0")]
    ZeroTransportDirection,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty sample set")]
    EmptySamples,

    /// The kernel singularity at coincident velocities is only integrable, never evaluated.
    #[error("kernel evaluated at coincident velocities")]
    CoincidentVelocities,

    #[error("quadrature did not converge: error estimate {estimate:e} above target {target:e}")]
    QuadratureNotConverged { estimate: f64, target: f64 },

    #[error("degenerate fit: need at least two distinct abscissae, got {distinct}")]
    DegenerateFit { distinct: usize },

    #[error("null space is empty at working precision ({rows}x{cols} matrix has full column rank)")]
    NullSpaceEmpty { rows: usize, cols: usize },

    #[error("profile has no closed-form derivative at x = {x}")]
    NotDifferentiable { x: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
