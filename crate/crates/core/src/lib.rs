//! Toolkit for partial (and weighted) matrix multiplication patterns.
//!
//! A *pattern* `Λ ⊆ I×J×K` selects which products `x_{ij} y_{jk} z_{ki}` appear
//! in a partial matrix multiplication tensor. This crate provides:
//!
//! - [`pattern`]: the pattern algebra (products, powers, sums, direct images)
//!   and the induced matrix-multiplication support;
//! - [`tensor`]: exact rational tensors, rank / border-rank witness checks and
//!   the randomized support-transfer restriction;
//! - [`info`]: distributions, marginal entropies, n-types and type classes;
//! - [`capacity`]: the entropy-characterized capacity region, with membership
//!   certificates and LP-duality checks, for any number of factors;
//! - [`sim`]: Monte Carlo simulation of the random-map covering construction
//!   and its failure bounds;
//! - [`bounds`]: exponent bounds (pattern bound, asymptotic sum inequality,
//!   laser-method bound).
//!
//! Indices are 0-based in memory. The JSON formats use 1-based indices for
//! patterns, maps and distributions over patterns.

pub mod bounds;
pub mod capacity;
mod error;
pub mod fixtures;
pub mod info;
pub mod pattern;
pub mod sim;
pub mod tensor;

pub use error::{Error, Result};
