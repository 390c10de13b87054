//! Budgeted partial descriptions of sets and the machinery for probing how
//! a description behaves under computable permutations.
//!
//! A [`PartialDescription`] answers membership queries with a budget: at
//! index `n` and budget `t` it returns `Zero`, `One`, or `Pending` (not yet
//! decided within `t`). Raising the budget can only turn `Pending` into an
//! answer; answers themselves never change. The *domain density* at a
//! horizon and budget is the fraction of indices that are already decided.
//!
//! Three battery modes compare descriptions against permuted sets over a
//! finite horizon. All three carry the same caveat: a finite battery over
//! finitely many permutations gathers evidence about behavior that is
//! actually quantified over *all* computable permutations, so a clean pass
//! is support, never proof.
//!
//! [`decide_from_generic`] turns a description that converges on most of a
//! dyadic class into a decision procedure: it dovetails widening index
//! windows against growing budgets and returns the first firm answer.

pub mod adversary;
pub mod census;
pub mod machine;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::density::PartialDensity;
use crate::error::{Error, Result};
use crate::permute::{image_set, ComputablePermutation};
use crate::seq::BitSequence;

pub use adversary::{
    adversary_permutation, adversary_permutation_capped, demand_exponent, DEFAULT_ADVERSARY_CAP,
};
pub use census::{triviality_census, CensusReport};
pub use machine::{classify_on_zero, enumerate_program, run, Classification, RunOutcome};

/// One budgeted membership answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartialBit {
    Zero,
    One,
    /// Not decided within the given budget.
    Pending,
}

impl PartialBit {
    /// The decided bit, if any.
    pub fn decided(self) -> Option<bool> {
        match self {
            PartialBit::Zero => Some(false),
            PartialBit::One => Some(true),
            PartialBit::Pending => None,
        }
    }
}

type EvalFn = dyn Fn(u64, u64) -> Result<PartialBit> + Send + Sync;

/// A budgeted membership evaluator: `evaluate(index, budget)`.
///
/// Implementations must be *monotone* (an answer at budget t is returned at
/// every budget ≥ t) and *stable* (never Zero at one budget and One at
/// another). The battery runners spot-check stability; they cannot enforce
/// it.
#[derive(Clone)]
pub struct PartialDescription {
    eval: Arc<EvalFn>,
    label: String,
}

impl std::fmt::Debug for PartialDescription {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartialDescription")
            .field("label", &self.label)
            .finish()
    }
}

impl PartialDescription {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(u64, u64) -> Result<PartialBit> + Send + Sync + 'static,
    ) -> Self {
        PartialDescription {
            eval: Arc::new(eval),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The answer at `index` within `budget`.
    pub fn evaluate(&self, index: u64, budget: u64) -> Result<PartialBit> {
        (self.eval)(index, budget)
    }

    /// Wraps a total sequence: every budget gets a firm answer.
    pub fn total(seq: &BitSequence) -> Self {
        let inner = seq.clone();
        PartialDescription::new(format!("total({})", seq.label()), move |n, _t| {
            Ok(if inner.bit(n)? {
                PartialBit::One
            } else {
                PartialBit::Zero
            })
        })
    }

    /// Delays each answer until the budget reaches `latency(index)`;
    /// below that the result is `Pending`.
    pub fn with_latency(
        &self,
        latency: impl Fn(u64) -> u64 + Send + Sync + 'static,
    ) -> Self {
        let inner = self.clone();
        PartialDescription::new(format!("{}+latency", self.label), move |n, t| {
            if t < latency(n) {
                Ok(PartialBit::Pending)
            } else {
                inner.evaluate(n, t)
            }
        })
    }

    /// Forces `Pending` at every budget on the members of `trap`, leaving
    /// the rest of the description untouched.
    pub fn diverging_on(&self, trap: &BitSequence) -> Self {
        let inner = self.clone();
        let trap = trap.clone();
        PartialDescription::new(
            format!("{} stalled on {}", self.label, trap.label()),
            move |n, t| {
                if trap.bit(n)? {
                    Ok(PartialBit::Pending)
                } else {
                    inner.evaluate(n, t)
                }
            },
        )
    }
}

/// The fraction of `[0, horizon)` a description decides within `budget`.
pub fn domain_density(
    f: &PartialDescription,
    horizon: u64,
    budget: u64,
) -> Result<PartialDensity> {
    if horizon == 0 || budget == 0 {
        return Err(Error::Parameter(
            "domain density needs horizon ≥ 1 and budget ≥ 1".into(),
        ));
    }
    let mut decided = 0u64;
    for n in 0..horizon {
        if f.evaluate(n, budget)? != PartialBit::Pending {
            decided += 1;
        }
    }
    PartialDensity::new(decided, horizon)
}

/// Outcome of comparing a description's firm answers against a reference
/// sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsistencyOutcome {
    /// Every decided index agreed with the reference.
    Pass,
    /// First index where a firm answer contradicted the reference.
    ViolationAt(u64),
}

/// Checks every firm answer of `f` below `horizon` at `budget` against
/// `reference`. `Pending` indices are skipped: a partial description is
/// judged only where it has committed.
pub fn consistency_check(
    f: &PartialDescription,
    reference: &BitSequence,
    horizon: u64,
    budget: u64,
) -> Result<ConsistencyOutcome> {
    if horizon == 0 || budget == 0 {
        return Err(Error::Parameter(
            "consistency check needs horizon ≥ 1 and budget ≥ 1".into(),
        ));
    }
    for n in 0..horizon {
        if let Some(bit) = f.evaluate(n, budget)?.decided() {
            if bit != reference.bit(n)? {
                return Ok(ConsistencyOutcome::ViolationAt(n));
            }
        }
    }
    Ok(ConsistencyOutcome::Pass)
}

/// The description of the permuted set: answers at `n` are read off the
/// original description at π⁻¹(n), preserving the budget.
pub fn describe_under_permutation(
    f: &PartialDescription,
    p: &ComputablePermutation,
) -> PartialDescription {
    let inner = f.clone();
    let p = p.clone();
    PartialDescription::new(format!("{} via {}", f.label(), p.label()), move |n, t| {
        inner.evaluate(p.unapply(n)?, t)
    })
}

/// Printed on every battery report. A battery samples finitely many
/// permutations up to a finite horizon, while the property it probes
/// quantifies over all computable permutations and all of ℕ; passing is
/// evidence, never proof.
pub const FINITE_BATTERY_CAVEAT: &str = "finite battery: checks finitely many permutations \
     on a finite horizon; a pass is evidence, not proof";

/// Per-permutation query counts made through an oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryCounts {
    pub forward: u64,
    pub backward: u64,
}

/// What happened for one battery entry.
#[derive(Clone, Debug)]
pub enum EntryResult {
    Evaluated {
        /// Fraction of the horizon the description decided.
        domain_density: PartialDensity,
        /// Agreement of firm answers with the permuted reference set.
        consistency: ConsistencyOutcome,
        /// Oracle query counts, when the mode routes through an oracle.
        queries: Option<QueryCounts>,
    },
    /// The entry could not be evaluated; the error is recorded and the
    /// battery moves on.
    Failed { message: String },
}

#[derive(Clone, Debug)]
pub struct BatteryEntry {
    pub label: String,
    pub result: EntryResult,
}

/// Results of running one description (or family) against a finite list of
/// permutations.
#[derive(Clone, Debug)]
pub struct BatteryReport {
    pub caveat: &'static str,
    pub horizon: u64,
    pub budget: u64,
    pub entries: Vec<BatteryEntry>,
}

impl BatteryReport {
    /// True when every entry evaluated cleanly and passed consistency.
    pub fn all_consistent(&self) -> bool {
        self.entries.iter().all(|e| {
            matches!(
                e.result,
                EntryResult::Evaluated {
                    consistency: ConsistencyOutcome::Pass,
                    ..
                }
            )
        })
    }
}

fn validate_battery(perm_count: usize, horizon: u64, budget: u64) -> Result<()> {
    if perm_count == 0 {
        return Err(Error::Parameter("battery needs at least one permutation".into()));
    }
    if horizon == 0 || budget == 0 {
        return Err(Error::Parameter(
            "battery needs horizon ≥ 1 and budget ≥ 1".into(),
        ));
    }
    Ok(())
}

fn evaluate_entry(
    description: &PartialDescription,
    reference: &BitSequence,
    horizon: u64,
    budget: u64,
    queries: Option<QueryCounts>,
) -> EntryResult {
    let run = || -> Result<EntryResult> {
        let consistency = consistency_check(description, reference, horizon, budget)?;
        let domain = domain_density(description, horizon, budget)?;
        Ok(EntryResult::Evaluated {
            domain_density: domain,
            consistency,
            queries,
        })
    };
    run().unwrap_or_else(|e| EntryResult::Failed {
        message: e.to_string(),
    })
}

/// Mode 1: one fixed description of `base`, pushed through each
/// permutation and checked against the permuted set π(base).
pub fn permutation_battery(
    f: &PartialDescription,
    base: &BitSequence,
    perms: &[ComputablePermutation],
    horizon: u64,
    budget: u64,
) -> Result<BatteryReport> {
    validate_battery(perms.len(), horizon, budget)?;
    let entries = perms
        .iter()
        .map(|p| {
            let pushed = describe_under_permutation(f, p);
            let reference = image_set(p, base);
            BatteryEntry {
                label: p.label().to_string(),
                result: evaluate_entry(&pushed, &reference, horizon, budget, None),
            }
        })
        .collect();
    Ok(BatteryReport {
        caveat: FINITE_BATTERY_CAVEAT,
        horizon,
        budget,
        entries,
    })
}

/// Mode 2: a uniform family — `builder(i)` yields the description claimed
/// for the i-th permuted set, and each is checked against its own π_i(base)
/// directly. A builder failure becomes a failed entry, not a battery abort.
pub fn uniform_family_mode(
    builder: impl Fn(u64) -> Result<PartialDescription>,
    base: &BitSequence,
    perms: &[ComputablePermutation],
    horizon: u64,
    budget: u64,
) -> Result<BatteryReport> {
    validate_battery(perms.len(), horizon, budget)?;
    let entries = perms
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let label = format!("family[{i}] vs {}", p.label());
            let result = match builder(i as u64) {
                Ok(f) => {
                    let reference = image_set(p, base);
                    evaluate_entry(&f, &reference, horizon, budget, None)
                }
                Err(e) => EntryResult::Failed {
                    message: e.to_string(),
                },
            };
            BatteryEntry { label, result }
        })
        .collect();
    Ok(BatteryReport {
        caveat: FINITE_BATTERY_CAVEAT,
        horizon,
        budget,
        entries,
    })
}

/// Black-box access to a permutation: both directions, no label, no
/// internals. A functional holding only this cannot special-case any
/// particular permutation's representation.
pub trait PermutationOracle: Send + Sync {
    fn forward(&self, n: u64) -> Result<u64>;
    fn backward(&self, n: u64) -> Result<u64>;
}

/// Oracle wrapper that counts queries in each direction.
pub struct CountingOracle {
    permutation: ComputablePermutation,
    forward_queries: AtomicU64,
    backward_queries: AtomicU64,
}

impl CountingOracle {
    pub fn new(p: &ComputablePermutation) -> Arc<Self> {
        Arc::new(CountingOracle {
            permutation: p.clone(),
            forward_queries: AtomicU64::new(0),
            backward_queries: AtomicU64::new(0),
        })
    }

    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            forward: self.forward_queries.load(Ordering::Relaxed),
            backward: self.backward_queries.load(Ordering::Relaxed),
        }
    }
}

impl PermutationOracle for CountingOracle {
    fn forward(&self, n: u64) -> Result<u64> {
        self.forward_queries.fetch_add(1, Ordering::Relaxed);
        self.permutation.apply(n)
    }

    fn backward(&self, n: u64) -> Result<u64> {
        self.backward_queries.fetch_add(1, Ordering::Relaxed);
        self.permutation.unapply(n)
    }
}

/// Mode 3: one functional receives each permutation as a black-box oracle
/// and must produce the description of that permuted set. Query counts
/// per permutation are recorded in the report.
pub fn oracle_mode(
    functional: impl Fn(Arc<dyn PermutationOracle>) -> PartialDescription,
    base: &BitSequence,
    perms: &[ComputablePermutation],
    horizon: u64,
    budget: u64,
) -> Result<BatteryReport> {
    validate_battery(perms.len(), horizon, budget)?;
    let entries = perms
        .iter()
        .map(|p| {
            let oracle = CountingOracle::new(p);
            let description = functional(Arc::clone(&oracle) as Arc<dyn PermutationOracle>);
            let reference = image_set(p, base);
            // Evaluate first so the recorded counts cover the whole run.
            let mut result = evaluate_entry(&description, &reference, horizon, budget, None);
            if let EntryResult::Evaluated { queries, .. } = &mut result {
                *queries = Some(oracle.counts());
            }
            BatteryEntry {
                label: p.label().to_string(),
                result,
            }
        })
        .collect();
    Ok(BatteryReport {
        caveat: FINITE_BATTERY_CAVEAT,
        horizon,
        budget,
        entries,
    })
}

/// Decides the common bit of the dyadic class `{2^(e+1)·(2j+1)}` from a
/// description that may stall on a sparse subset.
///
/// Round m evaluates the first `(m+1)·8` class elements at `budgets[m]`;
/// the first firm answer wins. Works whenever the description eventually
/// answers on *some* class element — a description stalling on a
/// density-zero set cannot blank out a whole dyadic class forever.
pub fn decide_from_generic(
    psi: &PartialDescription,
    e: u64,
    budgets: &[u64],
) -> Result<bool> {
    if budgets.is_empty() {
        return Err(Error::Parameter("decision needs at least one budget".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "decision budgets must be strictly increasing".into(),
        ));
    }
    let stride = 1u64
        .checked_shl(u32::try_from(e + 1).unwrap_or(u32::MAX))
        .ok_or_else(|| Error::Parameter(format!("class index {e} overflows u64 slots")))?;
    for (m, &budget) in budgets.iter().enumerate() {
        let window = (m as u64 + 1) * 8;
        for j in 0..window {
            let k = (2 * j + 1)
                .checked_mul(stride)
                .ok_or_else(|| Error::Parameter(format!("slot overflow in class {e}")))?;
            if let Some(bit) = psi.evaluate(k, budget)?.decided() {
                return Ok(bit);
            }
        }
    }
    Err(Error::Timeout {
        index: e,
        max_budget: *budgets.last().expect("nonempty budgets"),
    })
}
