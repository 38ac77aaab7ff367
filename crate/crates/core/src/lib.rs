//! Convexity of the joint range of two real quadratic functions.
//!
//! A quadratic function is stored as `x^T A x + 2 a^T x + a0`. The main entry
//! point is [`check_convexity`], which decides whether
//! `R(f, g) = {(f(x), g(x)) : x in R^n}` is convex and, when it is not, returns
//! two attained points of the range with an unattained point between them.

#[cfg(feature = "cli")]
pub mod cli;
pub mod convexity;
pub mod curated;
pub mod error;
pub mod generate;
pub mod quadratic;
pub mod range_oracle;
pub mod report;
pub mod separation;
pub mod spectral;

pub use convexity::{check_convexity, check_flores_bazan, cross_check, ConvexityCertificate, FbReport, Verdict};
pub use error::{Error, Result};
pub use quadratic::{ProblemInstance, QuadraticFunction, ToleranceSet};
pub use separation::{affine_separates_quadratic, level_pair_separation, AffineForm};
