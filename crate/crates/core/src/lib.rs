//! Numerical toolkit for locating small extremal domains of the first
//! Dirichlet eigenvalue of the Laplace–Beltrami operator.
//!
//! The crate computes, over a user-supplied or built-in metric chart:
//! the unit-ball spectral constants, the linearized boundary operator and its
//! modewise spectrum, pointwise curvature invariants by finite differences,
//! the localization function `Phi(p, eps) = R_p + eps^2 r_p` whose critical
//! points mark centers of extremal domains, and independent verification
//! oracles (space-form expansions, a perturbed-disk eigenvalue laboratory).
//!
//! All numerics are generic over the scalar type via [`real::Real`]
//! (`f32`/`f64`); the `*64` aliases below fix the common `f64` lane.

pub mod ball;
pub mod curvature;
pub mod boundary_op;
pub mod error;
pub mod fitting;
pub mod expr;
pub mod harmonics;
pub mod linalg;
pub mod localization;
pub mod metric;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod real;
pub mod roots;
pub mod spaceform;
pub mod special;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instantiations of the main domain types.
pub type RadialProfile64 = profile::RadialProfile<f64>;
pub type BallConstants64 = ball::BallConstants<f64>;
pub type Mat64 = linalg::Mat<f64>;
pub type SphereField64 = harmonics::SphereField<f64>;
pub type BoundaryOperator64 = boundary_op::BoundaryOperator<f64>;
