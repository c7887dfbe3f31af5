//! Error types shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// The mass function evaluated to a non-positive value.
    #[error("mass function non-positive at x = {x}: M(x) = {mass}")]
    NonPositiveMass { x: f64, mass: f64 },

    /// Evaluation of a sampled profile outside its sampled domain.
    #[error("x = {x} lies outside the sampled domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature failed to converge over [{a}, {b}] (requested tol {tol})")]
    QuadratureFailure { a: f64, b: f64, tol: f64 },

    /// Evaluation too close to the cosech/coth singularity at u = c.
    #[error("singular point at x = {x}: u - c = {dist} < {eps}")]
    SingularPoint { x: f64, dist: f64, eps: f64 },

    /// A constructor argument violates a domain invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A grid violates the length/spacing/finiteness invariants.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A closed-form state fails the normalizability tail test.
    #[error("state n = {n} is not normalizable: {reason}")]
    NonNormalizable { n: usize, reason: String },

    /// More bound states requested than n < k - 1/2 allows.
    #[error("requested {requested} state(s), but k = {k} supports only {supported} (n < k - 1/2)")]
    TooManyStates {
        requested: usize,
        k: f64,
        supported: usize,
    },

    /// Eigenvalue or eigenvector iteration failed to converge.
    #[error("eigensolver failed to converge for eigenvalue index {index}")]
    ConvergenceFailure { index: usize },
}

pub type Result<T> = std::result::Result<T, CoreError>;
