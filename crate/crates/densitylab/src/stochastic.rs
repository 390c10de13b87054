//! Selection rules, bias measurement, and the randomness-flavored density
//! laws: thinning along a pseudorandom set, k-fold mutual intersections,
//! and a nested interval construction whose members stay reachable by a
//! computable bound search.
//!
//! Monotone selection rules see only the prefix of bits already revealed;
//! the driver hands position n's bit to the rule only after the rule has
//! committed to select or skip it, so no rule can peek ahead. Bias is an
//! exact rational over the selected positions.
//!
//! The thinning experiment runs two independent routes to the same counts —
//! direct intersection counting and the selection driver — and asserts
//! their exact agreement at every step, which realizes the product law
//! ρ(A∩B) = ρ(A)·bias as an integer identity rather than an approximation.

use std::collections::HashSet;
use std::sync::Arc;

use crate::density::{density_profile, geometric_schedule, DensityProfile, PartialDensity};
use crate::error::{Error, Result};
use crate::seq::{intersect, prng_sequence, BitSequence, Seed, SeqKind};
use crate::Rational;

type DecideFn = dyn Fn(&[bool]) -> Result<bool> + Send + Sync;

/// A Church-style monotone selection rule: given the bits observed so far,
/// decide whether the next position is selected. The current position is
/// recoverable as the prefix length, so oblivious (position-only) rules are
/// the special case that ignores the prefix contents.
#[derive(Clone)]
pub struct MonotoneSelectionRule {
    decide: Arc<DecideFn>,
    label: String,
}

impl MonotoneSelectionRule {
    pub fn new(
        label: impl Into<String>,
        decide: impl Fn(&[bool]) -> Result<bool> + Send + Sync + 'static,
    ) -> Self {
        MonotoneSelectionRule {
            decide: Arc::new(decide),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn decide(&self, observed: &[bool]) -> Result<bool> {
        (self.decide)(observed)
    }
}

/// Selects every position.
pub fn select_all_rule() -> MonotoneSelectionRule {
    MonotoneSelectionRule::new("select-all", |_| Ok(true))
}

/// Selects position n exactly when bit n−1 was a one.
pub fn after_one_rule() -> MonotoneSelectionRule {
    MonotoneSelectionRule::new("after-one", |obs: &[bool]| {
        Ok(obs.last() == Some(&true))
    })
}

/// Oblivious rule selecting prime positions, backed by a sieve up to
/// `limit`. Walking past the sieve is a horizon error.
pub fn prime_rule(limit: u64) -> MonotoneSelectionRule {
    let mut sieve = vec![true; limit as usize];
    for p in sieve.iter_mut().take(2.min(limit as usize)) {
        *p = false;
    }
    let mut i = 2usize;
    while i * i < limit as usize {
        if sieve[i] {
            let mut m = i * i;
            while m < limit as usize {
                sieve[m] = false;
                m += i;
            }
        }
        i += 1;
    }
    MonotoneSelectionRule::new("primes", move |obs: &[bool]| {
        let n = obs.len() as u64;
        if n >= limit {
            return Err(Error::HorizonExceeded {
                label: "primes".into(),
                horizon: limit,
                index: n,
            });
        }
        Ok(sieve[n as usize])
    })
}

/// Oblivious rule selecting position n exactly when n belongs to `a` —
/// the thinning rule.
pub fn membership_rule(a: &BitSequence) -> MonotoneSelectionRule {
    let label = format!("member-of({})", a.label());
    let a = a.clone();
    MonotoneSelectionRule::new(label, move |obs: &[bool]| a.bit(obs.len() as u64))
}

/// What a selection-rule walk measured.
#[derive(Clone, Debug)]
pub struct SelectionReport {
    pub rule_label: String,
    pub horizon: u64,
    /// Positions the rule selected.
    pub selected: u64,
    /// Ones among the selected positions.
    pub selected_ones: u64,
    /// selected_ones / selected; None when nothing was selected.
    pub bias: Option<Rational>,
}

impl SelectionReport {
    pub fn empty_selection(&self) -> bool {
        self.selected == 0
    }
}

/// The ~4σ binomial band for a fair-coin null over `selected` trials; the
/// default tolerance for seeded bias checks.
pub fn bias_tolerance(selected: u64) -> f64 {
    4.0 / (selected as f64).sqrt()
}

/// Walks positions 0..horizon−1, letting the rule decide each position from
/// the bits observed so far, then revealing the bit. Reports the bias over
/// the selected positions.
pub fn select(
    rule: &MonotoneSelectionRule,
    s: &BitSequence,
    horizon: u64,
) -> Result<SelectionReport> {
    if horizon == 0 {
        return Err(Error::Parameter("selection horizon must be ≥ 1".into()));
    }
    let mut observed = Vec::with_capacity(horizon as usize);
    let mut selected = 0u64;
    let mut selected_ones = 0u64;
    for _ in 0..horizon {
        let take = rule.decide(&observed)?;
        let bit = s.bit(observed.len() as u64)?;
        if take {
            selected += 1;
            if bit {
                selected_ones += 1;
            }
        }
        observed.push(bit);
    }
    debug_assert!(selected_ones <= selected);
    Ok(SelectionReport {
        rule_label: rule.label().to_string(),
        horizon,
        selected,
        selected_ones,
        bias: (selected > 0)
            .then(|| Rational::new(selected_ones as i64, selected as i64)),
    })
}

/// Result of thinning `a` along a pseudorandom set B.
#[derive(Clone, Debug)]
pub struct ThinningReport {
    pub horizon: u64,
    pub rho_a: PartialDensity,
    pub rho_ab: PartialDensity,
    /// Exact count(A∩B)/count(A); None when a is empty below the horizon.
    pub ratio: Option<Rational>,
    pub selection: SelectionReport,
    /// ρ(A∩B) at geometric checkpoints up to the horizon.
    pub profile: Vec<PartialDensity>,
}

/// Intersects `a` with B = prng(seed) and measures the thinned density by
/// two routes at once: direct intersection counts, and the selection driver
/// running the rule "select position n when n ∈ A". The two routes must
/// agree exactly at every step — count identities, not tolerances — and
/// their disagreement is a construction bug.
pub fn thinning_experiment(
    a: &BitSequence,
    seed: Seed,
    horizon: u64,
) -> Result<ThinningReport> {
    if horizon < 1000 {
        return Err(Error::Parameter(format!(
            "thinning horizon {horizon} < 1000"
        )));
    }
    let b = prng_sequence(seed);
    let both = intersect(a, &b);
    let rule = membership_rule(a);
    let schedule = geometric_schedule(horizon, 1.1)?;

    let mut observed = Vec::with_capacity(horizon as usize);
    let mut count_a = 0u64;
    let mut count_ab = 0u64;
    let mut selected = 0u64;
    let mut selected_ones = 0u64;
    let mut profile = Vec::with_capacity(schedule.len());
    let mut next_checkpoint = 0usize;
    for n in 0..horizon {
        // Selection route: commit first, then reveal B's bit.
        let take = rule.decide(&observed)?;
        let bit_b = b.bit(n)?;
        if take {
            selected += 1;
            if bit_b {
                selected_ones += 1;
            }
        }
        observed.push(bit_b);
        // Direct route: independent evaluations of a and a∩B.
        if a.bit(n)? {
            count_a += 1;
        }
        if both.bit(n)? {
            count_ab += 1;
        }
        if selected != count_a || selected_ones != count_ab {
            return Err(Error::ConstructionBug(format!(
                "thinning routes split at n={n}: selected {selected} vs count {count_a}, \
                 ones {selected_ones} vs count {count_ab}"
            )));
        }
        if n + 1 == schedule[next_checkpoint] {
            profile.push(PartialDensity::new(count_ab, n + 1)?);
            next_checkpoint += 1;
        }
    }
    Ok(ThinningReport {
        horizon,
        rho_a: PartialDensity::new(count_a, horizon)?,
        rho_ab: PartialDensity::new(count_ab, horizon)?,
        ratio: (count_a > 0).then(|| Rational::new(count_ab as i64, count_a as i64)),
        selection: SelectionReport {
            rule_label: rule.label().to_string(),
            horizon,
            selected,
            selected_ones,
            bias: (selected > 0)
                .then(|| Rational::new(selected_ones as i64, selected as i64)),
        },
        profile,
    })
}

/// Result of intersecting k seeded pseudorandom sets.
#[derive(Clone, Debug)]
pub struct IntersectReport {
    pub k: u32,
    pub horizon: u64,
    pub density: PartialDensity,
    /// 2^−k.
    pub target: Rational,
    pub deviation: f64,
}

/// Exact density of ⋂ sets below the horizon, for arbitrary sequences.
pub fn intersection_density(sets: &[BitSequence], horizon: u64) -> Result<PartialDensity> {
    if sets.is_empty() {
        return Err(Error::Parameter("intersection of zero sets".into()));
    }
    let mut count = 0u64;
    for n in 0..horizon {
        let mut all = true;
        for s in sets {
            if !s.bit(n)? {
                all = false;
                break;
            }
        }
        if all {
            count += 1;
        }
    }
    PartialDensity::new(count, horizon)
}

/// Intersects k seeded fair-coin sets and reports the deviation from the
/// product target 2^−k. Distinct seeds are required: the seeds stand in for
/// mutually independent randoms, and a repeat breaks that surrogate.
pub fn mutual_intersection_experiment(
    k: u32,
    seeds: &[Seed],
    horizon: u64,
) -> Result<IntersectReport> {
    if k == 0 || k > 62 {
        return Err(Error::Parameter(format!("fold count {k} outside 1..=62")));
    }
    if seeds.len() != k as usize {
        return Err(Error::Parameter(format!(
            "expected {k} seeds, got {}",
            seeds.len()
        )));
    }
    let distinct: HashSet<u64> = seeds.iter().map(|s| s.0).collect();
    if distinct.len() != seeds.len() {
        return Err(Error::Parameter(
            "duplicate seeds break the independence surrogate".into(),
        ));
    }
    if horizon == 0 {
        return Err(Error::Parameter("horizon must be ≥ 1".into()));
    }
    let sets: Vec<BitSequence> = seeds.iter().map(|&s| prng_sequence(s)).collect();
    let density = intersection_density(&sets, horizon)?;
    let target = Rational::new(1, 1i64 << k);
    let deviation =
        (density.as_f64() - *target.numer() as f64 / *target.denom() as f64).abs();
    Ok(IntersectReport {
        k,
        horizon,
        density,
        target,
        deviation,
    })
}

/// Result of the nested construction.
#[derive(Clone, Debug)]
pub struct NestedReport {
    /// Cut bounds k_0 < k_1 < … < k_J.
    pub cuts: Vec<u64>,
    /// The covered intervals [k_{j−1}, k_j), with k_{−1} = 0.
    pub intervals: Vec<(u64, u64)>,
    /// The member of level j found in interval j; it survives into the
    /// final set because later levels keep everything below their cut.
    pub witnesses: Vec<u64>,
    /// Levels A_0 ⊇ A_1 ⊇ … ⊇ A_J.
    pub levels: Vec<BitSequence>,
    /// A_J, the deepest level.
    pub final_set: BitSequence,
    /// Density profile of the final set to the horizon.
    pub profile: DensityProfile,
}

/// Builds the nested chain A_0 = R_0, A_{j+1} = A_j ∩ ([0, k_j) ∪ R_{j+1})
/// from J+1 seeded pseudorandom sets, where each bound k_j is found by
/// direct search as the least bound making [k_{j−1}, k_j) meet A_j. Every
/// returned interval therefore contains a member of the final set, which is
/// what keeps the final set's principal function computably bounded even
/// though its density falls to ~2^−(J+1).
pub fn nested_construction(seeds: &[Seed], horizon: u64) -> Result<NestedReport> {
    if seeds.len() < 2 {
        return Err(Error::Parameter(
            "nested construction needs J ≥ 1, i.e. at least 2 seeds".into(),
        ));
    }
    if horizon < 2 {
        return Err(Error::Parameter("horizon must be ≥ 2".into()));
    }
    let j_max = seeds.len() - 1;
    let mut levels: Vec<BitSequence> = vec![prng_sequence(seeds[0])];
    let mut cuts = Vec::with_capacity(seeds.len());
    let mut intervals = Vec::with_capacity(seeds.len());
    let mut witnesses = Vec::with_capacity(seeds.len());
    let mut prev_cut = 0u64;
    for j in 0..=j_max {
        let level = levels[j].clone();
        let mut witness = None;
        for n in prev_cut..horizon {
            if level.bit(n)? {
                witness = Some(n);
                break;
            }
        }
        let Some(m) = witness else {
            return Err(Error::InsufficientHorizon {
                level: j as u64,
                completed: (j > 0).then(|| j as u64 - 1),
                horizon,
            });
        };
        let cut = m + 1;
        cuts.push(cut);
        intervals.push((prev_cut, cut));
        witnesses.push(m);
        if j < j_max {
            let r = prng_sequence(seeds[j + 1]);
            let prev = level.clone();
            let next = BitSequence::new(
                SeqKind::Derived,
                format!("nested-level{}", j + 1),
                move |n| Ok(prev.bit(n)? && (n < cut || r.bit(n)?)),
            );
            levels.push(next);
        }
        prev_cut = cut;
    }
    let final_set = levels[j_max].clone();
    let profile = density_profile(&final_set, &geometric_schedule(horizon, 1.1)?)?;
    Ok(NestedReport {
        cuts,
        intervals,
        witnesses,
        levels,
        final_set,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::partial_density;
    use crate::seq::{empty, omega, standard_set, StandardSet};

    #[test]
    fn select_all_on_evens_is_half() {
        let report = select(&select_all_rule(), &standard_set(StandardSet::Evens).unwrap(), 1000)
            .unwrap();
        assert_eq!(report.selected, 1000);
        assert_eq!(report.bias, Some(Rational::new(1, 2)));
    }

    #[test]
    fn after_one_on_all_ones_is_biased_to_one() {
        let report = select(&after_one_rule(), &omega(), 1000).unwrap();
        // Position 0 has no predecessor and is skipped; everything else hits.
        assert_eq!(report.selected, 999);
        assert_eq!(report.bias, Some(Rational::new(1, 1)));
    }

    #[test]
    fn prime_positions_on_prng_stay_fair() {
        let report = select(&prime_rule(1_000_000), &prng_sequence(Seed(42)), 1_000_000).unwrap();
        assert_eq!(report.selected, 78_498); // π(10⁶)
        let bias = *report.bias.unwrap().numer() as f64 / *report.bias.unwrap().denom() as f64;
        assert!((bias - 0.5).abs() <= 0.01, "bias {bias}");
    }

    #[test]
    fn prime_rule_errors_past_sieve() {
        let report = select(&prime_rule(100), &omega(), 101);
        assert!(matches!(report, Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn empty_selection_flagged() {
        let never = MonotoneSelectionRule::new("never", |_| Ok(false));
        let report = select(&never, &omega(), 100).unwrap();
        assert!(report.empty_selection());
        assert_eq!(report.bias, None);
    }

    #[test]
    fn thinning_arithmetic_third() {
        let a = standard_set(StandardSet::Arithmetic {
            modulus: 3,
            residue: 0,
        })
        .unwrap();
        let report = thinning_experiment(&a, Seed(42), 1_000_000).unwrap();
        let rho = report.rho_ab.as_f64();
        assert!((rho - 1.0 / 6.0).abs() <= 0.005, "thinned density {rho}");
        // The selection bias is the B-frequency over members of a: near 1/2.
        let bias = report.selection.bias.unwrap();
        let bias = *bias.numer() as f64 / *bias.denom() as f64;
        assert!((bias - 0.5).abs() <= bias_tolerance(report.selection.selected));
    }

    #[test]
    fn thinning_all_ones_returns_b_density() {
        let report = thinning_experiment(&omega(), Seed(7), 10_000).unwrap();
        let b = prng_sequence(Seed(7));
        let direct = partial_density(&b, 10_000).unwrap();
        assert_eq!(report.rho_ab.count(), direct.count());
        assert_eq!(report.ratio, Some(direct.value()));
    }

    #[test]
    fn thinning_empty_set_selects_nothing() {
        let report = thinning_experiment(&empty(), Seed(7), 1000).unwrap();
        assert_eq!(report.rho_ab.count(), 0);
        assert!(report.selection.empty_selection());
        assert_eq!(report.ratio, None);
    }

    #[test]
    fn thinning_horizon_validated() {
        assert!(thinning_experiment(&omega(), Seed(1), 999).is_err());
    }

    #[test]
    fn thinning_profile_ends_at_horizon() {
        let report = thinning_experiment(&omega(), Seed(3), 2000).unwrap();
        assert_eq!(report.profile.last().unwrap().horizon(), 2000);
        assert!(report
            .profile
            .windows(2)
            .all(|w| w[0].horizon() < w[1].horizon()));
    }

    #[test]
    fn single_prng_density_near_half() {
        let report = mutual_intersection_experiment(1, &[Seed(42)], 1_000_000).unwrap();
        assert!(report.deviation <= 0.002, "deviation {}", report.deviation);
        assert_eq!(report.target, Rational::new(1, 2));
    }

    #[test]
    fn triple_intersection_near_eighth() {
        let report =
            mutual_intersection_experiment(3, &[Seed(1), Seed(2), Seed(3)], 1_000_000).unwrap();
        assert!(report.deviation <= 0.01, "deviation {}", report.deviation);
        assert_eq!(report.target, Rational::new(1, 8));
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let err = mutual_intersection_experiment(2, &[Seed(5), Seed(5)], 1000);
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn degenerate_intersection_is_exact() {
        let b = prng_sequence(Seed(42));
        let sets = vec![omega(), b.clone()];
        let rho = intersection_density(&sets, 10_000).unwrap();
        assert_eq!(rho.count(), partial_density(&b, 10_000).unwrap().count());
    }

    #[test]
    fn nested_two_levels_matches_pairwise_intersection() {
        let report = nested_construction(&[Seed(1), Seed(2)], 1_000_000).unwrap();
        let r0 = prng_sequence(Seed(1));
        let r1 = prng_sequence(Seed(2));
        let k0 = report.cuts[0];
        for n in k0..5000 {
            assert_eq!(
                report.final_set.bit(n).unwrap(),
                r0.bit(n).unwrap() && r1.bit(n).unwrap()
            );
        }
        let rho = report.profile.last().as_f64();
        assert!((rho - 0.25).abs() <= 0.01, "density {rho}");
    }

    #[test]
    fn nested_witnesses_live_in_their_intervals() {
        let seeds: Vec<Seed> = (1..=7).map(Seed).collect();
        let report = nested_construction(&seeds, 1_000_000).unwrap();
        assert_eq!(report.intervals.len(), 7);
        for (j, &(lo, hi)) in report.intervals.iter().enumerate() {
            let w = report.witnesses[j];
            assert!(lo <= w && w < hi);
            assert!(report.final_set.bit(w).unwrap(), "witness {w} dropped");
        }
        assert!(report.cuts.windows(2).all(|c| c[0] < c[1]));
    }

    #[test]
    fn nested_chain_is_decreasing() {
        let seeds: Vec<Seed> = (1..=4).map(Seed).collect();
        let report = nested_construction(&seeds, 100_000).unwrap();
        for level in &report.levels {
            for n in 0..10_000 {
                // final ⊆ A_j for every j.
                if report.final_set.bit(n).unwrap() {
                    assert!(level.bit(n).unwrap());
                }
            }
        }
    }

    #[test]
    fn nested_deep_density_matches_product_target() {
        let seeds: Vec<Seed> = (1..=7).map(Seed).collect();
        let report = nested_construction(&seeds, 1_000_000).unwrap();
        let rho = report.profile.last().as_f64();
        let target = 1.0 / 128.0;
        assert!(
            rho >= 0.5 * target && rho <= 2.0 * target,
            "density {rho} vs target {target}"
        );
    }

    #[test]
    fn nested_insufficient_horizon_reports_level() {
        // First seed starts with a one (so k_0 = 1); second seed's bit 1 is
        // a zero, emptying A_1 ∩ [1, 2) and stranding the level-1 search.
        let first = (1..20)
            .map(Seed)
            .find(|&s| prng_sequence(s).bit(0).unwrap())
            .expect("some small seed starts with a one");
        let second = (100..120)
            .map(Seed)
            .find(|&s| !prng_sequence(s).bit(1).unwrap())
            .expect("some seed has a zero at position 1");
        let err = nested_construction(&[first, second], 2);
        match err {
            Err(Error::InsufficientHorizon {
                level,
                completed,
                horizon,
            }) => assert_eq!((level, completed, horizon), (1, Some(0), 2)),
            other => panic!("expected insufficient horizon, got {other:?}"),
        }
    }
}
