//! Inexact proximal augmented Lagrangian solver for composite convex problems
//!
//! ```text
//! min_x  f(x) + g(x) + h1(A1 x)   s.t.  A2 x ∈ K
//! ```
//!
//! with `f` a sum of half-squared residuals, `g` separable with a cheap prox,
//! `h1` Lipschitz with a cheap prox and `K` a simple closed convex set.
//! Each outer iteration smooths `h` around the current multiplier, then runs
//! one of four linearly convergent inner solvers for a number of iterations
//! chosen by a computable budget rule.

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod ipalm;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod smoothing;
pub mod solvers;

pub use error::{IpalmError, Result};
