//! Subharmonic metrics `λ|dz|²` on plane domains, with `λ = exp(-2(p(ω) + h))`
//! for a signed curvature measure `ω` and a harmonic function `h`.
//!
//! The crate evaluates potentials and conformal factors, measures λ-lengths,
//! approximates the induced distance with a two-stage shortest-path solver,
//! computes rotations and turns of broken lines, and carries closed-form flat
//! cone geometry used as ground truth.

pub mod cone;
pub mod convergence;
pub mod curves;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod measure;
pub mod metric;
pub mod potential;
pub mod quadrature;
pub mod scene;
pub mod turn;

pub type Point = num_complex::Complex64;

pub use error::{Error, Result};
pub use harmonic::{conjugate_diff, ComplexPoly, HarmonicPoly};
pub use measure::{Atom, CircleDensity, DiscDensity, Domain, GridDensity, SignedMeasure};
pub use scene::{Derivation, MetricScene, PointClass};
