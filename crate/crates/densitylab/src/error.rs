//! Error taxonomy shared by every module.
//!
//! Evaluation is fallible by design: table-backed sequences refuse indices past
//! their horizon, injections detect collisions lazily, sequential constructions
//! can exhaust their search space. Each failure mode gets its own variant so
//! callers (and the CLI exit-code mapping) can tell a usage problem from a
//! broken invariant.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or malformed.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A table-backed sequence was evaluated past its stored horizon.
    #[error("sequence `{label}` stores bits up to {horizon} but was evaluated at {index}")]
    HorizonExceeded {
        label: String,
        horizon: u64,
        index: u64,
    },

    /// A claimed injection mapped two inputs to the same value.
    #[error("injection `{label}` maps both {first} and {second} to {image}")]
    InjectivityViolation {
        label: String,
        first: u64,
        second: u64,
        image: u64,
    },

    /// A permutation failed its forward/inverse round-trip check.
    #[error("permutation `{label}` failed a round-trip check at {index}")]
    PermutationIntegrity { label: String, index: u64 },

    /// A lazily-checked infinitude assumption failed: a sequence ran out of
    /// members (or non-members) before the working horizon.
    #[error("sequence `{label}` has fewer than {requested} {what} below {horizon} (found {found})")]
    InsufficientSet {
        label: String,
        what: &'static str,
        requested: u64,
        found: u64,
        horizon: u64,
    },

    /// A principal-function search ran out of members; names the largest n
    /// that was achieved before the search horizon.
    #[error(
        "only {achieved} of {requested} members found below search horizon {horizon}; \
         largest completed n = {achieved}"
    )]
    InsufficientMembers {
        requested: u64,
        achieved: u64,
        horizon: u64,
    },

    /// A level-by-level search passed its horizon; reports the last level that
    /// completed.
    #[error("search for level {level} passed horizon {horizon}; last completed level: {completed:?}")]
    InsufficientHorizon {
        level: u64,
        completed: Option<u64>,
        horizon: u64,
    },

    /// An internal construction violated a property it guarantees by
    /// construction. Reaching this is a bug, never a tolerance issue.
    #[error("construction bug: {0}")]
    ConstructionBug(String),

    /// A requested verification ran to completion and found violations.
    #[error("check failed: {0}")]
    CheckFailed(String),

    /// A dovetailed search exhausted its budget schedule without convergence.
    #[error("no convergence for index {index} within the budget schedule (largest budget {max_budget})")]
    Timeout { index: u64, max_budget: u64 },

    /// A forward image lies beyond the replay cap of a sequentially built
    /// permutation.
    #[error("forward image of {input} was not reached within {cap} replay steps")]
    EvaluationCap { input: u64, cap: u64 },

    /// File I/O failed while writing a report.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
