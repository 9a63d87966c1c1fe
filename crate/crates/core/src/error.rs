use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or under-resolved configuration, detected before any work.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    /// The radial moment of some degree is too small to invert.
    #[error("radial moment for degree {degree} is {moment:e}; inversion would overflow")]
    MomentUnderflow { degree: usize, moment: f64 },

    /// `u0 - ∫ g h` fell below the floor at the listed grid nodes.
    #[error("denominator below floor at {} node(s), minimum modulus {min_modulus:e}", nodes.len())]
    DegenerateDenominator { nodes: Vec<usize>, min_modulus: f64 },

    /// The seeded perturbation search did not restore the denominator condition.
    #[error("perturbation budget of {attempts} attempts exhausted; best minimum modulus {best_min_modulus:e}")]
    PerturbationExhausted { attempts: usize, best_min_modulus: f64 },

    /// The Lippmann–Schwinger solve did not reach its tolerance.
    #[error(
        "solver stopped after {iterations} iterations with relative residual {:e}; refine the ball grid or lower the clipping bound",
        residual_history.last().copied().unwrap_or(f64::NAN)
    )]
    SolverDiverged {
        iterations: usize,
        residual_history: Vec<f64>,
    },

    /// `1 + C0 / (zeta |S|)` vanishes.
    #[error("impedance makes the effective capacitance singular")]
    SingularImpedance,

    /// A ratio of norms was requested for an identically zero field.
    #[error("fraction undefined for an identically zero field")]
    UndefinedFraction,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
