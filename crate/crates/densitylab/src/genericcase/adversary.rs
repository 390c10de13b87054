//! The index-set adversary: a computable permutation that funnels padded
//! siblings into prescribed dyadic target sets.
//!
//! Targets n = 2^(e+1)·odd — the dyadic class of exponent e+1 — are
//! "demands" for program index e: processing demands in increasing n, each
//! receives the least not-yet-used padded sibling x_{e,i} with i ≥ 1 as its
//! preimage. Every other slot (0 and the odd numbers) receives the next
//! pad-0 code in increasing order; pad-0 codes are never padded siblings,
//! so the two pools cannot collide and the result is a bijection with
//! π⁻¹(dyadic class e+1) consisting of siblings of e only.
//!
//! Preimages are computed by replaying this allocation to a memoized
//! frontier. Forward evaluation of a pad-0 code is closed-form; forward
//! evaluation of a demanded code replays until the allocation reaches it,
//! which can be astronomically far out (the first demand for index e sits
//! at 2^(e+1)), so forward replay is capped and reports an evaluation-cap
//! error beyond it rather than spinning forever.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use super::machine::{pad_of, padding_enumeration, pair};
use crate::error::{Error, Result};
use crate::permute::ComputablePermutation;

/// The demand index e of a target slot: n = 2^(e+1)·odd for even n ≥ 2.
/// Odd slots and 0 are waste slots and carry no demand.
pub fn demand_exponent(n: u64) -> Option<u64> {
    if n == 0 || n % 2 == 1 {
        None
    } else {
        Some(n.trailing_zeros() as u64 - 1)
    }
}

struct AdversaryState {
    /// Slots below this are allocated.
    frontier: u64,
    /// slot → preimage code, demand slots only (waste is closed-form).
    inv: HashMap<u64, u64>,
    /// demanded code → slot.
    fwd: HashMap<u64, u64>,
    used: HashSet<u64>,
    /// Per-index next sibling candidate i ≥ 1.
    cursors: HashMap<u64, u64>,
}

impl AdversaryState {
    fn advance_to(&mut self, n_inclusive: u64) -> Result<()> {
        while self.frontier <= n_inclusive {
            let n = self.frontier;
            if let Some(e) = demand_exponent(n) {
                let mut i = *self.cursors.get(&e).unwrap_or(&1);
                loop {
                    let x = padding_enumeration(e, i)?;
                    i += 1;
                    if self.used.insert(x) {
                        if self.fwd.insert(x, n).is_some() || self.inv.insert(n, x).is_some()
                        {
                            return Err(Error::ConstructionBug(format!(
                                "allocation collision at slot {n}"
                            )));
                        }
                        break;
                    }
                }
                self.cursors.insert(e, i);
            }
            self.frontier = n + 1;
        }
        Ok(())
    }
}

/// Preimage of a waste slot: the k-th odd slot gets the k-th nonzero
/// triangular number pair(k, 0), and slot 0 gets pair(0, 0) = 0.
fn waste_preimage(n: u64) -> Result<u64> {
    debug_assert!(n == 0 || n % 2 == 1);
    pair(n.div_ceil(2), 0)
}

/// Forward replay cap used by `adversary_permutation`.
pub const DEFAULT_ADVERSARY_CAP: u64 = 1 << 20;

/// The adversary permutation with an explicit forward-replay cap.
pub fn adversary_permutation_capped(replay_cap: u64) -> ComputablePermutation {
    let state = Arc::new(Mutex::new(AdversaryState {
        frontier: 0,
        inv: HashMap::new(),
        fwd: HashMap::new(),
        used: HashSet::new(),
        cursors: HashMap::new(),
    }));
    let inv = {
        let state = Arc::clone(&state);
        move |n: u64| {
            if demand_exponent(n).is_none() {
                return waste_preimage(n);
            }
            let mut st = state.lock().expect("adversary state lock");
            st.advance_to(n)?;
            Ok(st.inv[&n])
        }
    };
    let fwd = {
        let state = Arc::clone(&state);
        move |code: u64| {
            if pad_of(code) == 0 {
                // pair(c, 0) sits at slot 0 for c = 0, else at the c-th odd.
                let c = super::machine::unpair(code).0;
                return Ok(if c == 0 { 0 } else { 2 * c - 1 });
            }
            let mut st = state.lock().expect("adversary state lock");
            if let Some(&n) = st.fwd.get(&code) {
                return Ok(n);
            }
            st.advance_to(replay_cap)?;
            match st.fwd.get(&code) {
                Some(&n) => Ok(n),
                None => Err(Error::EvaluationCap {
                    input: code,
                    cap: replay_cap,
                }),
            }
        }
    };
    ComputablePermutation::new("adversary", fwd, inv)
}

/// The adversary permutation with the default replay cap.
pub fn adversary_permutation() -> ComputablePermutation {
    adversary_permutation_capped(DEFAULT_ADVERSARY_CAP)
}
