//! Riemannian independent component analysis.
//!
//! The library computes coordinate representations of geometric tensors
//! (metric, Christoffel symbols, Ricci curvature, covariant Hessians) from a
//! density and a Riemannian metric, diagonalizes the resulting
//! curvature-corrected second-derivative tensor through a generalized
//! symmetric eigenproblem, and recovers pointwise-disentangled sources from
//! geodesic normal coordinates. Four closed-form geometries (sphere,
//! hyperbolic space, flat torus, SPD matrices) ship with analytic
//! exponential/logarithmic maps, alongside a generic ODE/shooting fallback
//! for arbitrary metric fields. FastICA and a Möbius-flow nonlinear-ICA
//! baseline plus MCC / total-correlation estimators round out the benchmark
//! tooling.
//!
//! All numerical kernels are generic over the scalar type through
//! [`scalar::Scalar`]; the crate root exposes `f64` aliases for the common
//! types.

pub mod baselines;
pub mod error;
pub mod geodesics;
pub mod geometry;
pub mod linalg;
pub mod manifolds;
pub mod metrics;
pub mod rica;
pub mod scalar;
pub mod sources;
pub mod stream;

pub use error::Error;
pub use scalar::Scalar;

// Concrete f64 aliases for the main public types.
pub type Mat64 = linalg::Mat<f64>;
pub type Point64 = geometry::Point<f64>;
pub type Tangent64 = geometry::Tangent<f64>;
pub type MetricField64 = geometry::MetricField<f64>;
pub type ScalarField64 = geometry::ScalarField<f64>;
pub type ChristoffelTensor64 = geometry::ChristoffelTensor<f64>;
pub type RicciMatrix64 = geometry::RicciMatrix<f64>;
pub type Frame64 = rica::Frame<f64>;
pub type DisentanglementMatrix64 = rica::DisentanglementMatrix<f64>;
pub type EigenResult64 = rica::EigenResult<f64>;
pub type SourceConfig64 = sources::SourceConfig<f64>;
pub type SourceBatch64 = sources::SourceBatch<f64>;
pub type MccReport64 = metrics::MccReport<f64>;
pub type TcReport64 = metrics::TcReport<f64>;
