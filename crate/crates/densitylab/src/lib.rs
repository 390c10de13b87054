//! densitylab: exact asymptotic-density experiments on subsets of ℕ.
//!
//! The crate treats a subset of the naturals as a total 0/1 sequence and
//! provides, in layers:
//!
//! - [`seq`] — the sequence abstraction, library sets, and keyed
//!   pseudorandom surrogates;
//! - [`density`] — exact partial densities, profiles, liminf/limsup
//!   estimation, and principal-function diagnostics;
//! - [`permute`] — computable injections and permutations, set images and
//!   sampled subsequences, and the injection-to-permutation construction
//!   with its √n error bound;
//! - [`construct`] — computable sets with prescribed rational lower and
//!   upper densities;
//! - [`stochastic`] — monotone selection rules, thinning and intersection
//!   experiments, and the nested interval construction;
//! - [`genericcase`] — partial descriptions with step budgets, a toy
//!   register machine with padding, the halting-triviality census, and the
//!   index-set adversary permutation with its decision procedure;
//! - [`cli`] — the command-line front end.
//!
//! All densities are exact rationals (integer counts over integer horizons);
//! floating point appears only in rendered reports. Every measurement against
//! a pseudorandom surrogate is evidence about the generator at the stated
//! scale, never a proof about genuinely random sets.

pub mod cli;
pub mod construct;
pub mod density;
pub mod error;
pub mod genericcase;
pub mod permute;
pub mod seq;
pub mod selfcheck;
pub mod stochastic;
pub mod tokens;

/// Exact rational used everywhere a density or target appears.
pub type Rational = num_rational::Ratio<i64>;

pub use error::{Error, Result};
