//! Builder for computable sets with prescribed rational lower and upper
//! densities.
//!
//! Four regimes, dispatched on the target pair (lower, upper):
//! degenerate 0 and 1 are realized by the perfect squares and their
//! complement; an interior common value d uses the Beatty floor-difference
//! rule, whose counting function tracks n·d within 1 exactly; and a strict
//! gap lower < upper uses a target-driven oscillator that emits ones until
//! the partial density crosses the upper target, then zeros until it falls
//! to the lower target, forever. Phase lengths grow geometrically, so the
//! partial density keeps revisiting both targets in the limit.
//!
//! When a target sits on an endpoint (lower = 0 or upper = 1) the fixed
//! target is unreachable from inside after any one has been emitted, so the
//! oscillator walks a per-cycle threshold toward that endpoint
//! (1 − 2^(−j−1), respectively 2^(−j−1), in cycle j) on the affected side
//! only. Interior targets stay fixed.
//!
//! Only rational targets are supported.

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::seq::{complement, standard_set, BitSequence, SeqKind, StandardSet};
use crate::Rational;

fn validate_pair(lower: Rational, upper: Rational) -> Result<()> {
    let zero = Rational::new(0, 1);
    let one = Rational::new(1, 1);
    if lower < zero || upper > one || lower > upper {
        return Err(Error::Parameter(format!(
            "density targets ({lower}, {upper}) must satisfy 0 ≤ lower ≤ upper ≤ 1"
        )));
    }
    Ok(())
}

/// The Beatty floor-difference rule for exact density d = a/b:
/// bit(n) = ⌊(n+1)d⌋ − ⌊nd⌋, so count(n) = ⌊nd⌋ exactly.
fn beatty_sequence(d: Rational) -> BitSequence {
    let a = *d.numer() as u128;
    let b = *d.denom() as u128;
    BitSequence::new(
        SeqKind::ClosedForm,
        format!("prescribed({d})"),
        move |n| {
            let n = n as u128;
            Ok((n + 1) * a / b - n * a / b == 1)
        },
    )
    .with_known_density(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Filling,
    Draining,
}

/// Sequential oscillator state: a packed bit frontier plus the running count
/// and the active phase. Extended only forward; reads below the frontier are
/// pure lookups.
struct OscState {
    words: Vec<u64>,
    len: u64,
    ones: u64,
    phase: Phase,
    cycle: u32,
    lower: Rational,
    upper: Rational,
}

impl OscState {
    fn new(lower: Rational, upper: Rational) -> Self {
        OscState {
            words: Vec::new(),
            len: 0,
            ones: 0,
            phase: Phase::Filling,
            cycle: 0,
            lower,
            upper,
        }
    }

    /// Upper target for the current cycle: fixed when interior, walking
    /// toward 1 when the requested upper is exactly 1.
    fn upper_target(&self) -> Rational {
        if self.upper < Rational::new(1, 1) {
            self.upper
        } else {
            let e = (self.cycle.min(61) + 1) as i64;
            Rational::new(1, 1) - Rational::new(1, 1i64 << e)
        }
    }

    /// Lower target, symmetric to `upper_target`.
    fn lower_target(&self) -> Rational {
        if self.lower > Rational::new(0, 1) {
            self.lower
        } else {
            let e = (self.cycle.min(61) + 1) as i64;
            Rational::new(1, 1i64 << e)
        }
    }

    fn push(&mut self, bit: bool) {
        let word = (self.len / 64) as usize;
        if word == self.words.len() {
            self.words.push(0);
        }
        if bit {
            self.words[word] |= 1u64 << (self.len % 64);
            self.ones += 1;
        }
        self.len += 1;
    }

    fn density_at_least(&self, target: Rational) -> bool {
        self.ones as u128 * *target.denom() as u128
            >= self.len as u128 * *target.numer() as u128
    }

    fn density_at_most(&self, target: Rational) -> bool {
        self.ones as u128 * *target.denom() as u128
            <= self.len as u128 * *target.numer() as u128
    }

    /// Emits one bit and updates the phase. Returns true when the phase
    /// switched at this step (the new length is then a phase boundary).
    fn step(&mut self) -> bool {
        match self.phase {
            Phase::Filling => {
                self.push(true);
                if self.density_at_least(self.upper_target()) {
                    self.phase = Phase::Draining;
                    return true;
                }
            }
            Phase::Draining => {
                self.push(false);
                if self.density_at_most(self.lower_target()) {
                    self.phase = Phase::Filling;
                    self.cycle += 1;
                    return true;
                }
            }
        }
        false
    }

    fn bit(&self, n: u64) -> bool {
        self.words[(n / 64) as usize] >> (n % 64) & 1 == 1
    }
}

fn oscillating_sequence(lower: Rational, upper: Rational) -> BitSequence {
    let state = Arc::new(Mutex::new(OscState::new(lower, upper)));
    BitSequence::new(
        SeqKind::Derived,
        format!("prescribed({lower},{upper})"),
        move |n| {
            let mut s = state.lock().expect("oscillator lock");
            while s.len <= n {
                s.step();
            }
            Ok(s.bit(n))
        },
    )
}

/// Builds a computable set whose estimated lower and upper densities are the
/// requested rationals. See the module docs for the four regimes.
pub fn build_prescribed_density(lower: Rational, upper: Rational) -> Result<BitSequence> {
    validate_pair(lower, upper)?;
    let zero = Rational::new(0, 1);
    let one = Rational::new(1, 1);
    if lower == upper {
        if lower == zero {
            return standard_set(StandardSet::Squares);
        }
        if lower == one {
            return Ok(complement(&standard_set(StandardSet::Squares)?));
        }
        return Ok(beatty_sequence(lower));
    }
    Ok(oscillating_sequence(lower, upper))
}

/// Observed phase structure of an oscillating construction: the lengths at
/// which phases switched, the target active in each phase, and the measured
/// cycle growth factor.
#[derive(Clone, Debug)]
pub struct OscillationSchedule {
    /// Strictly increasing lengths at which the phase switched.
    pub boundaries: Vec<u64>,
    /// Target in force during the phase that ended at each boundary
    /// (alternating upper, lower, upper, …).
    pub targets: Vec<Rational>,
    /// Ratio of the last two completed full-cycle lengths; > 1 whenever
    /// phases grow.
    pub growth_factor: Rational,
}

/// Runs the oscillating construction for (lower, upper) to `horizon` bits
/// and records its phase switches. Requires lower < upper and at least three
/// switches within the horizon.
pub fn oscillation_schedule(
    lower: Rational,
    upper: Rational,
    horizon: u64,
) -> Result<OscillationSchedule> {
    validate_pair(lower, upper)?;
    if lower == upper {
        return Err(Error::Parameter(
            "oscillation schedule needs lower < upper".into(),
        ));
    }
    let mut state = OscState::new(lower, upper);
    let mut boundaries = Vec::new();
    let mut targets = Vec::new();
    while state.len < horizon {
        let target = match state.phase {
            Phase::Filling => state.upper_target(),
            Phase::Draining => state.lower_target(),
        };
        if state.step() {
            boundaries.push(state.len);
            targets.push(target);
        }
    }
    if boundaries.len() < 3 {
        return Err(Error::Parameter(format!(
            "horizon {horizon} saw only {} phase switches; need ≥ 3",
            boundaries.len()
        )));
    }
    let last = boundaries[boundaries.len() - 1] as i64;
    let prev = boundaries[boundaries.len() - 3] as i64;
    Ok(OscillationSchedule {
        boundaries,
        targets,
        growth_factor: Rational::new(last, prev),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{
        density_profile, estimate_limits, geometric_schedule, partial_density,
    };

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn constant_half_is_alternating() {
        let s = build_prescribed_density(r(1, 2), r(1, 2)).unwrap();
        assert_eq!(s.prefix(10).unwrap(), "0101010101");
        for k in 1..=50u64 {
            assert_eq!(partial_density(&s, 2 * k).unwrap().count(), k);
        }
        assert_eq!(s.known_density(), Some(r(1, 2)));
    }

    #[test]
    fn degenerate_targets_are_squares_and_complement() {
        let squares = standard_set(StandardSet::Squares).unwrap();
        let zero = build_prescribed_density(r(0, 1), r(0, 1)).unwrap();
        let one = build_prescribed_density(r(1, 1), r(1, 1)).unwrap();
        for n in 0..100 {
            assert_eq!(zero.bit(n).unwrap(), squares.bit(n).unwrap());
            assert_eq!(one.bit(n).unwrap(), !squares.bit(n).unwrap());
        }
        assert_eq!(zero.known_density(), Some(r(0, 1)));
        assert_eq!(one.known_density(), Some(r(1, 1)));
    }

    #[test]
    fn quarter_density_count_oracle() {
        let s = build_prescribed_density(r(1, 4), r(1, 4)).unwrap();
        let mut count = 0u64;
        for n in 1..=10_000u64 {
            if s.bit(n - 1).unwrap() {
                count += 1;
            }
            assert!(count == n / 4 || count == n.div_ceil(4));
        }
    }

    #[test]
    fn beatty_discrepancy_below_one() {
        // |b·count(n) − n·a| < b, the exact form of |count − n·d| < 1.
        let (a, b) = (3u64, 7u64);
        let s = build_prescribed_density(r(a as i64, b as i64), r(a as i64, b as i64)).unwrap();
        let mut count = 0u64;
        for n in 1..=5000u64 {
            if s.bit(n - 1).unwrap() {
                count += 1;
            }
            let lhs = (b * count) as i128 - (n * a) as i128;
            assert!(lhs.unsigned_abs() < b as u128, "n={n}");
        }
    }

    #[test]
    fn oscillation_prefix_frozen() {
        // Hand trace for (1/3, 2/3): ones to density 2/3, zeros to 1/3,
        // with cycle length ×4.
        let s = build_prescribed_density(r(1, 3), r(2, 3)).unwrap();
        assert_eq!(s.prefix(24).unwrap(), "100111000000111111111111");
    }

    #[test]
    fn oscillation_schedule_frozen_interior() {
        let sched = oscillation_schedule(r(1, 3), r(2, 3), 100).unwrap();
        assert_eq!(sched.boundaries, vec![1, 3, 6, 12, 24, 48, 96]);
        let expected: Vec<Rational> = [
            r(2, 3),
            r(1, 3),
            r(2, 3),
            r(1, 3),
            r(2, 3),
            r(1, 3),
            r(2, 3),
        ]
        .into();
        assert_eq!(sched.targets, expected);
        assert_eq!(sched.growth_factor, r(4, 1));
    }

    #[test]
    fn oscillation_schedule_frozen_endpoints() {
        // (0,1) walks thresholds toward both endpoints: 1/2, then 3/4 and
        // 1/4, then 7/8 and 1/8, ...
        let sched = oscillation_schedule(r(0, 1), r(1, 1), 100_000).unwrap();
        assert_eq!(sched.boundaries, vec![1, 2, 4, 12, 72, 504, 7056]);
        let expected: Vec<Rational> = [
            r(1, 2),
            r(1, 2),
            r(3, 4),
            r(1, 4),
            r(7, 8),
            r(1, 8),
            r(15, 16),
        ]
        .into();
        assert_eq!(sched.targets, expected);
        // Same-phase boundary ratio 7056/72: endpoint-walking targets make
        // cycles accelerate rather than grow at a fixed rate.
        assert_eq!(sched.growth_factor, r(98, 1));
    }

    #[test]
    fn full_oscillation_estimates_near_endpoints() {
        let s = build_prescribed_density(r(0, 1), r(1, 1)).unwrap();
        let sched = geometric_schedule(1 << 16, 1.1).unwrap();
        let profile = density_profile(&s, &sched).unwrap();
        let est = estimate_limits(&profile).unwrap();
        let lower = *est.lower.numer() as f64 / *est.lower.denom() as f64;
        let upper = *est.upper.numer() as f64 / *est.upper.denom() as f64;
        assert!(lower < 0.15, "tail min {lower}");
        assert!(upper > 0.85, "tail max {upper}");
    }

    #[test]
    fn oscillation_infinite_and_coinfinite() {
        let s = build_prescribed_density(r(1, 3), r(2, 3)).unwrap();
        let mut ones = 0u64;
        let mut zeros = 0u64;
        for n in 1000..10_000 {
            if s.bit(n).unwrap() {
                ones += 1;
            } else {
                zeros += 1;
            }
        }
        assert!(ones > 100 && zeros > 100);
    }

    #[test]
    fn oscillating_has_no_density_claim() {
        let s = build_prescribed_density(r(1, 3), r(2, 3)).unwrap();
        assert_eq!(s.known_density(), None);
    }

    #[test]
    fn target_validation() {
        assert!(build_prescribed_density(r(2, 3), r(1, 3)).is_err());
        assert!(build_prescribed_density(r(-1, 3), r(1, 3)).is_err());
        assert!(build_prescribed_density(r(1, 3), r(4, 3)).is_err());
        assert!(oscillation_schedule(r(1, 2), r(1, 2), 1000).is_err());
    }

    #[test]
    fn schedule_needs_enough_horizon() {
        assert!(oscillation_schedule(r(1, 3), r(2, 3), 4).is_err());
    }
}
