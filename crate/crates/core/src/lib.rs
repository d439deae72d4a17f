//! Invariant Kähler structures on tangent bundles of compact symmetric spaces.
//!
//! The crate builds the restricted-root data of a compact symmetric pair,
//! evaluates the Hermitian matrix fields whose positivity and determinant
//! decide whether an invariant ansatz is Kähler and Ricci-flat, and carries
//! an explicit treatment of the `SO(3)`-invariant family on `TS^2` together
//! with an independent finite-difference curvature checker.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod kahler;
pub mod liealg;
pub mod linalg;
pub mod quadrature;
pub mod rootdata;
pub mod spaces;
pub mod sphere2;

pub use error::{Error, Result};
