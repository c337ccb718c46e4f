//! Worst-case optimal recovery on [-1, 1].
//!
//! The crate computes three kinds of certified objects from noisy linear
//! observations `y = L(f) + e`:
//!
//! - **Chebyshev centers** of the data-consistent set, i.e. locally optimal
//!   recovery maps, for polytope models ([`local::center_polytope`]) and for
//!   polynomial sup-norm balls ([`local::center_polyball`]);
//! - **globally optimal linear estimators** of a linear functional under an
//!   approximability model, with a two-sided optimality certificate from a
//!   truncated-moment relaxation ([`functional::solve_weights`]);
//! - **near-optimal full recovery maps** into C[-1, 1] assembled from
//!   node-wise optimal weights and a quasi-interpolation operator
//!   ([`full::build_near_optimal_map`]).
//!
//! Everything runs on a built-in conic interior-point solver ([`conic`]);
//! randomized cross-checks live in [`oracles`].

pub mod cheb;
pub mod conic;
pub mod error;
pub mod full;
pub mod functional;
pub mod local;
pub mod measure;
pub mod oracles;
pub mod quad;

pub use error::{Error, Result};
