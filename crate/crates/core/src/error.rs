use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("characteristic roots are degenerate (separation {separation:.3e}, scale {scale:.3e})")]
    DegenerateRoots { separation: f64, scale: f64 },

    #[error("imaginary residue {residue:.3e} exceeds tolerance in {context}")]
    Residue { residue: f64, context: &'static str },

    #[error("pole of the damping kernel at lambda = {0}")]
    Pole(f64),

    #[error("quadrature did not converge: error {error:.3e} > target {target:.3e} after {intervals} intervals")]
    QuadratureFailure {
        error: f64,
        target: f64,
        intervals: usize,
    },

    #[error("covariance determinant {det:.12} below the uncertainty bound 1/4")]
    HeisenbergViolation { det: f64 },

    #[error("digamma argument {0} is on the non-positive real axis")]
    DigammaDomain(String),

    #[error("propagator lost symplecticity: residual {0:.3e}")]
    PropagatorFailure(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
