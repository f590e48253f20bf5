//! Exact valuative computations over truncated Puiseux series.
//!
//! The crate provides, bottom-up:
//!
//! * [`gamma`] — the multiplicative value group with exact rational
//!   exponents;
//! * [`puiseux`] — the concrete valued field: truncated Puiseux series,
//!   valuation / leading-term / residue maps and a contraction root solver;
//! * [`vla`] — valued linear algebra: directions, reduced bases, subspace
//!   residues and lifts, and the `Δ` distance between subspaces;
//! * [`riso`] — risometry checking and search on finite point sets, and
//!   translater-sample validation;
//! * [`strat`] — built-in stratified families (cusp curves, the trumpet
//!   surface, a parabola), ball triviality sampling and critical value
//!   functions with their piecewise-monomial fit;
//! * [`lipschitz`] — val-chains, the nested-subspace construction and
//!   order-r Taylor checks for arc families.

pub mod config;
pub mod error;
pub mod gamma;
pub mod lipschitz;
pub mod puiseux;
pub mod riso;
pub mod strat;
pub mod vla;

pub use error::{Error, Result};
