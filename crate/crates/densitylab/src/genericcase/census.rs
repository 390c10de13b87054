//! Halting census over the program enumeration: how much of the code space
//! is trivially decidable at a given step budget.

use rayon::prelude::*;

use super::machine::{classify_on_zero, enumerate_program, Classification};
use crate::error::{Error, Result};
use crate::Rational;

/// Outcome of classifying programs 0..horizon on input 0 at one budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusReport {
    pub horizon: u64,
    pub budget: u64,
    /// Halted within the budget.
    pub halting: u64,
    /// Certified repeating state within the budget.
    pub diverging: u64,
    pub undecided: u64,
}

impl CensusReport {
    /// (halting + diverging)/horizon, exact.
    pub fn decided_density(&self) -> Rational {
        Rational::new((self.halting + self.diverging) as i64, self.horizon as i64)
    }
}

/// Classifies every program code below `horizon` on input 0: halted within
/// the budget, certified diverging by an exact state revisit, or undecided.
/// Sharded across threads; the three counts always sum to the horizon.
pub fn triviality_census(horizon: u64, budget: u64) -> Result<CensusReport> {
    if horizon == 0 || budget == 0 {
        return Err(Error::Parameter(
            "census horizon and budget must be ≥ 1".into(),
        ));
    }
    let (halting, diverging, undecided) = (0..horizon)
        .into_par_iter()
        .map(|code| {
            let prog = enumerate_program(code);
            match classify_on_zero(&prog, budget)? {
                Classification::Halting => Ok((1u64, 0u64, 0u64)),
                Classification::Diverging => Ok((0, 1, 0)),
                Classification::Undecided => Ok((0, 0, 1)),
            }
        })
        .try_reduce(
            || (0, 0, 0),
            |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)),
        )?;
    Ok(CensusReport {
        horizon,
        budget,
        halting,
        diverging,
        undecided,
    })
}
