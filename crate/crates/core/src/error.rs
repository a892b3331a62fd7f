//! Error taxonomy shared by the numerical modules.

use thiserror::Error;

/// Errors surfaced by the geometry, geodesic, recovery, and baseline kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A point violates a chart domain constraint (e.g. Poincaré ball radius).
    #[error("domain violation: {0}")]
    Domain(String),

    /// A dense linear-algebra primitive failed (singular matrix, non-SPD input).
    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A point lies outside the injectivity radius of the exponential map.
    #[error("outside injectivity radius: {0}")]
    Radius(String),

    /// Geodesic integration produced a non-finite state.
    #[error("geodesic integration failed at step {step}")]
    Integration { step: usize },

    /// Shooting iteration did not reach the endpoint tolerance.
    #[error("shooting did not converge: final residual {residual:e}")]
    Convergence { residual: f64 },

    /// Input covariance has fewer positive directions than requested.
    #[error("rank deficiency: {0}")]
    Rank(String),

    /// A Möbius layer was evaluated too close to its inversion pole.
    #[error("pole proximity: {0}")]
    Pole(String),

    /// Too few samples for the requested estimator.
    #[error("sample size too small: {0}")]
    SampleSize(String),

    /// Random frame draw was rank-deficient twice in a row.
    #[error("degenerate random frame draw")]
    DegenerateDraw,

    /// Flow training hit a non-finite loss.
    #[error("training failure at step {step}: {msg}")]
    Training { step: usize, msg: String },

    /// A density or field evaluation returned a non-finite value.
    #[error("evaluation failure: {0}")]
    Eval(String),
}

pub type Result<V> = std::result::Result<V, Error>;
