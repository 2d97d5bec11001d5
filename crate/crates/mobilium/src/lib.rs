//! Generating functions of mobiles, computed two independent ways and
//! cross-validated.
//!
//! Mobiles are decorated plane trees whose generating functions obey
//! band-matrix recursions: a lower band matrix `P` and an upper band matrix
//! `Q` collect the tree weights, and the one-point functions `R_i` sit on
//! the subdiagonal of `P`.  This crate computes them
//!
//! * exactly, as truncated multivariate power series in the vertex weights
//!   ([`solver`]), validated against a brute-force tree enumerator
//!   ([`oracle`]); and
//! * numerically, from the double points of the associated spectral curve
//!   through determinant formulas ([`curve`], [`ba`], [`dets`]).
//!
//! The two routes are independent from end to end and the integration tests
//! compare them coefficient by coefficient and value by value.

pub mod ba;
pub mod band;
pub mod cli;
pub mod coupling;
pub mod curve;
pub mod dets;
pub mod error;
pub mod laurent;
pub mod oracle;
pub mod precision;
pub mod report;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
