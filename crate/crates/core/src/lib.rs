//! Physics-based model identification and policy search over discrete
//! candidate sets.
//!
//! An object's mass and friction are identified by comparing a planar
//! pushing simulator against observed pushes. The simulation error over a
//! discrete grid of candidate models is treated as a black-box function:
//! a Gaussian process models it, Monte-Carlo draws from the joint posterior
//! give the probability that each candidate is the minimizer, and the
//! candidate with the largest entropy term of that distribution is simulated
//! next ("greedy entropy search"). The same optimizer then picks pushing
//! policies under the most likely model.
//!
//! The crate is `no_std` (it needs `alloc`). IO, file formats and the
//! command-line front end live in the `physid` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod baselines;
pub mod entropy_search;
mod error;
pub mod gp;
pub mod identification;
pub mod linalg;
pub mod policy_opt;
mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use seed::derive_seed;

/// Value recorded for objective evaluations that failed (NaN, infinite, or a
/// simulation error).
pub const LARGE: f64 = 1e30;
