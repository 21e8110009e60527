use crate::Point;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point ({}, {}) lies on the polyline", .0.re, .0.im)]
    PointOnCurve(Point),

    #[error("polyline reverses direction at vertex {0} (turning angle of pi)")]
    Reversal(usize),

    #[error("atom at ({}, {}) lies on {}", .0.re, .0.im, .1)]
    AtomOnCurve(Point, &'static str),

    #[error("point ({}, {}) is possibly at infinity (atom weight {} >= 2pi)", .0.re, .0.im, .1)]
    PossiblyAtInfinity(Point, f64),

    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    QuadratureNotConverged { estimate: f64, error: f64 },

    #[error("one-sided limits disagree under extrapolation (spread {0:e})")]
    ExtrapolationDisagreement(f64),

    #[error("derivative of the conformal map vanishes near ({}, {})", .0.re, .0.im)]
    VanishingDerivative(Point),

    #[error("grid cell {cell} exceeds half the mollifier radius {h}")]
    GridTooCoarse { cell: f64, h: f64 },

    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),

    #[error("operation requires an underived scene")]
    DerivedScene,
}
