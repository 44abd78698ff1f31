//! Numerical laboratory for quasi-periodic analytic Jacobi and Schrödinger
//! cocycles.
//!
//! The crate is organised bottom-up:
//!
//! * [`arithmetic`]: continued fractions of the frequency, the truncated
//!   Liouville exponent, torus distances and orbit searches.
//! * [`analytic`]: trigonometric polynomials on a complex strip, the
//!   logarithmic potential `I(ζ)` and the `ε₀` grid estimate.
//! * [`linalg`]: closed-form complex 2×2 matrix kernels.
//! * [`cocycle`]: transfer matrices and renormalised n-step products in the
//!   raw, analytic and unimodular gauges.
//! * [`lyapunov`]: finite-scale Lyapunov exponents, extrapolation, explicit
//!   thresholds and Hölder fits.
//! * [`deviation`]: Birkhoff sums of the logarithmic kernel and large
//!   deviation experiments.
//! * [`avalanche`]: the Avalanche Principle as an executable checker, in
//!   double and in arbitrary precision.
//! * [`config`]: the plain-text model format.
//!
//! Every grid reduction goes through [`reduce`], which fixes the summation
//! order so that results do not depend on the number of worker threads.

pub mod analytic;
pub mod arithmetic;
pub mod avalanche;
pub mod cocycle;
pub mod config;
pub mod deviation;
pub mod linalg;
pub mod lyapunov;
pub mod precise;
pub mod reduce;
pub mod stats;

pub use analytic::TrigPolynomial;
pub use arithmetic::{CFExpansion, Frequency, Rotation};
pub use cocycle::{Gauge, JacobiModel, ScaledProduct};
pub use linalg::Mat2;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Crate-level error.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Arithmetic(#[from] arithmetic::ArithmeticError),
    #[error(transparent)]
    Analytic(#[from] analytic::AnalyticError),
    #[error(transparent)]
    Cocycle(#[from] cocycle::CocycleError),
    #[error(transparent)]
    Lyapunov(#[from] lyapunov::LyapunovError),
    #[error(transparent)]
    Deviation(#[from] deviation::DeviationError),
    #[error(transparent)]
    Avalanche(#[from] avalanche::AvalancheError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}

impl Error {
    /// True for errors caused by invalid user input rather than by a
    /// numerically degenerate model.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Arithmetic(e) => matches!(e, arithmetic::ArithmeticError::Domain(_)),
            Error::Analytic(e) => matches!(e, analytic::AnalyticError::InvalidInput(_)),
            Error::Lyapunov(e) => matches!(e, lyapunov::LyapunovError::InvalidInput(_)),
            Error::Deviation(e) => matches!(
                e,
                deviation::DeviationError::InvalidInput(_)
                    | deviation::DeviationError::Lyapunov(lyapunov::LyapunovError::InvalidInput(_))
            ),
            Error::Avalanche(e) => matches!(e, avalanche::AvalancheError::InvalidInput(_)),
            Error::Cocycle(e) => matches!(e, cocycle::CocycleError::InvalidModel(_)),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
