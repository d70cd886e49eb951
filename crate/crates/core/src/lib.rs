//! Numerical analysis of parametrized ruled submanifolds of Euclidean space.
//!
//! A ruled submanifold is swept by an `(m-1)`-dimensional affine subspace
//! moving along a unit-speed directrix:
//! `σ(t, u) = γ(t) + u¹X_1(t) + … + u^{m-1}X_{m-1}(t)`.
//! The crate computes the degree of the ruling distribution, the striction
//! submanifold and the singular locus, tests the rank-one condition, and
//! segments a patch into cylindrical, conical and tangent regions.

pub mod classify;
pub mod distribution;
pub mod error;
pub mod multilinear;
pub mod parametric;
pub mod ruledgeom;
pub mod striction;

pub use error::{GeomError, Result};
