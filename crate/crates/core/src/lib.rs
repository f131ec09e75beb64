//! Exact normal-form calculus for ordinary differential operators.
//!
//! Operators live in the completed Weyl algebra graded by homogeneous order
//! (`ord(x^n d^m) = m - n`). The crate provides truncated exact arithmetic on such operators,
//! the G-form description of homogeneous components, Schur conjugation to normal forms,
//! Newton-region analysis of normal forms, the standard-form expansion of `(D+L)^k`, and the
//! restriction-top-line commutativity criterion.

pub mod arith;
pub mod criterion;
pub mod diffop;
pub mod error;
pub mod fixtures;
pub mod gform;
pub mod newton;
pub mod parse;
pub mod powerform;
pub mod schur;
pub mod suites;

pub use arith::{CycloScalar, Rational};
pub use diffop::{GradedOp, TruncPoly, XCap, XdMonomial};
pub use error::{Error, Result};
pub use gform::{FitBounds, Hcp, HcpSeries};
