//! Invariant graph subspaces of self-adjoint 2×2 block operator matrices
//! `B = [[A0, V], [V*, A1]]` with `sup spec(A0) ≤ λ ≤ inf spec(A1)`.
//!
//! The crate builds the invariant subspace 𝔔, extracts the contractive
//! solution `X` of the Riccati equation `A1·X − X·A0 − X·V·X + V* = 0`
//! from its graph, certifies the two-sided norm estimates for `X` and
//! `P − Q`, computes the maximal subspaces `K0`/`K1` on which `X` is
//! isometric, and classifies uniqueness of contractive solutions.

pub mod bounds;
pub mod check;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod model;
pub mod projections;
pub mod riccati;

pub use error::{Error, Result};
pub use linalg::{Matrix, Subspace, Tolerances, C64};
