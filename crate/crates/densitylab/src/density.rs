//! Exact partial densities, density profiles, liminf/limsup estimation, and
//! principal-function diagnostics.
//!
//! Everything here is exact: a partial density is an integer count over an
//! integer horizon, and the identities these quantities satisfy (complement
//! sums, the principal-function product, factorial-interval bounds) are
//! checked with integer arithmetic, never with floating-point tolerances.
//! Floats appear only as convenience renderings in reports.
//!
//! Limit estimates deserve their name: true lower/upper densities are limits
//! and cannot be computed from any finite prefix. `estimate_limits` reports
//! the min/max over the tail of a finite profile and nothing stronger.

use crate::error::{Error, Result};
use crate::seq::{factorial, BitSequence};
use crate::Rational;

/// An exact partial density: `count` members below `horizon`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartialDensity {
    count: u64,
    horizon: u64,
}

impl PartialDensity {
    /// Requires `horizon ≥ 1` and `count ≤ horizon`.
    pub fn new(count: u64, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Parameter("partial density at horizon 0".into()));
        }
        if count > horizon {
            return Err(Error::Parameter(format!(
                "count {count} exceeds horizon {horizon}"
            )));
        }
        Ok(PartialDensity { count, horizon })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// The exact value count/horizon.
    pub fn value(&self) -> Rational {
        Rational::new(self.count as i64, self.horizon as i64)
    }

    /// Convenience float for reports.
    pub fn as_f64(&self) -> f64 {
        self.count as f64 / self.horizon as f64
    }
}

impl std::fmt::Display for PartialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.count, self.horizon)
    }
}

/// The partial density of `s` at horizon `n ≥ 1`, by a single counting pass.
pub fn partial_density(s: &BitSequence, n: u64) -> Result<PartialDensity> {
    if n == 0 {
        return Err(Error::Parameter(
            "partial density is undefined at horizon 0".into(),
        ));
    }
    let mut count = 0u64;
    for k in 0..n {
        if s.bit(k)? {
            count += 1;
        }
    }
    PartialDensity::new(count, n)
}

/// Partial densities sampled at a strictly increasing list of horizons.
#[derive(Clone, Debug)]
pub struct DensityProfile {
    values: Vec<PartialDensity>,
    tail_window: f64,
}

/// Default fraction of checkpoints treated as the tail by `estimate_limits`.
pub const DEFAULT_TAIL_WINDOW: f64 = 0.5;

impl DensityProfile {
    pub fn values(&self) -> &[PartialDensity] {
        &self.values
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = u64> + '_ {
        self.values.iter().map(|v| v.horizon())
    }

    pub fn tail_window(&self) -> f64 {
        self.tail_window
    }

    /// Replaces the tail window (a fraction in (0, 1]).
    pub fn with_tail_window(mut self, w: f64) -> Result<Self> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::Parameter(format!(
                "tail window {w} outside (0, 1]"
            )));
        }
        self.tail_window = w;
        Ok(self)
    }

    /// The final value (at the largest checkpoint).
    pub fn last(&self) -> PartialDensity {
        *self.values.last().expect("profiles are nonempty")
    }
}

/// The default geometric checkpoint schedule: all distinct values of ⌈r^k⌉
/// up to `limit`, with `limit` itself always the last checkpoint. Geometric
/// spacing samples densely inside each doubling, so oscillations with
/// geometric phase structure are not aliased.
pub fn geometric_schedule(limit: u64, ratio: f64) -> Result<Vec<u64>> {
    if limit == 0 {
        return Err(Error::Parameter("schedule limit must be ≥ 1".into()));
    }
    if !ratio.is_finite() || ratio <= 1.0 {
        return Err(Error::Parameter(format!("schedule ratio {ratio} must be > 1")));
    }
    let mut out = Vec::new();
    let mut x = 1.0f64;
    loop {
        let n = x.ceil() as u64;
        if n >= limit {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= ratio;
    }
    out.push(limit);
    Ok(out)
}

/// Profiles `s` over `schedule` in one incremental pass.
pub fn density_profile(s: &BitSequence, schedule: &[u64]) -> Result<DensityProfile> {
    if schedule.is_empty() {
        return Err(Error::Parameter("empty checkpoint schedule".into()));
    }
    if schedule[0] == 0 {
        return Err(Error::Parameter("checkpoints must be ≥ 1".into()));
    }
    if !schedule.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Parameter(
            "checkpoint schedule must be strictly increasing".into(),
        ));
    }
    let mut values = Vec::with_capacity(schedule.len());
    let mut count = 0u64;
    let mut next = 0usize;
    for k in 0..*schedule.last().unwrap() {
        if s.bit(k)? {
            count += 1;
        }
        if k + 1 == schedule[next] {
            values.push(PartialDensity::new(count, k + 1)?);
            next += 1;
        }
    }
    Ok(DensityProfile {
        values,
        tail_window: DEFAULT_TAIL_WINDOW,
    })
}

/// Finite estimates of lower and upper density from a profile's tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LimitEstimates {
    /// Minimum partial density over the tail window: an estimate, not a liminf.
    pub lower: Rational,
    /// Maximum partial density over the tail window: an estimate, not a limsup.
    pub upper: Rational,
}

/// Min and max of the profile values over the final `tail_window` fraction of
/// checkpoints. Requires ≥ 2 checkpoints.
pub fn estimate_limits(p: &DensityProfile) -> Result<LimitEstimates> {
    let len = p.values.len();
    if len < 2 {
        return Err(Error::Parameter(
            "limit estimation needs a profile with ≥ 2 checkpoints".into(),
        ));
    }
    let tail_len = ((len as f64 * p.tail_window).ceil() as usize).clamp(1, len);
    let tail = &p.values[len - tail_len..];
    let lower = tail.iter().map(|v| v.value()).min().unwrap();
    let upper = tail.iter().map(|v| v.value()).max().unwrap();
    Ok(LimitEstimates { lower, upper })
}

/// The principal function table: entry n is the least x with at least n
/// members below x.
#[derive(Clone, Debug)]
pub struct PrincipalTable {
    entries: Vec<u64>, // entries[i] = p(i+1)
}

impl PrincipalTable {
    /// p(n) for 1 ≤ n ≤ n_max.
    pub fn get(&self, n: u64) -> Option<u64> {
        if n == 0 {
            return None;
        }
        self.entries.get(n as usize - 1).copied()
    }

    pub fn n_max(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Iterates (n, p(n)) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u64 + 1, p))
    }
}

/// Computes p(n) for n = 1..=n_max by scanning bits below `search_horizon`.
/// Errors if fewer than `n_max` members exist in range, naming the largest n
/// that was achieved.
pub fn principal_function(
    s: &BitSequence,
    n_max: u64,
    search_horizon: u64,
) -> Result<PrincipalTable> {
    if n_max == 0 {
        return Err(Error::Parameter("principal function needs n_max ≥ 1".into()));
    }
    let mut entries = Vec::with_capacity(n_max as usize);
    let mut count = 0u64;
    for x in 0..search_horizon {
        if s.bit(x)? {
            count += 1;
            // x is the count-th member, so the least horizon containing
            // count members is x + 1.
            entries.push(x + 1);
            if count == n_max {
                return Ok(PrincipalTable { entries });
            }
        }
    }
    Err(Error::InsufficientMembers {
        requested: n_max,
        achieved: count,
        horizon: search_horizon,
    })
}

/// Pairs (n, ρ at horizon p(n)) for n = 1..=n_max. Each pair satisfies the
/// exact identity count = n at horizon p(n), by the minimality of p(n).
pub fn upper_density_checkpoints(
    s: &BitSequence,
    n_max: u64,
    search_horizon: u64,
) -> Result<Vec<(u64, PartialDensity)>> {
    let table = principal_function(s, n_max, search_horizon)?;
    table
        .iter()
        .map(|(n, p)| Ok((n, PartialDensity::new(n, p)?)))
        .collect()
}

/// Verdict of a single slope in `linear_domination_check`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlopeReport {
    pub slope: Rational,
    /// Largest n ≤ checked_to with p(n) ≤ slope·n, if any.
    pub last_crossing: Option<u64>,
    pub checked_to: u64,
}

impl SlopeReport {
    /// True when p(n) > slope·n for the whole checked tail, i.e. the last
    /// crossing (if any) lies strictly before the end of the range.
    pub fn dominated_in_tail(&self) -> bool {
        match self.last_crossing {
            None => true,
            Some(n) => n < self.checked_to,
        }
    }
}

/// For each positive slope k, finds the largest n ≤ n_max with p(n) ≤ k·n.
/// Superlinear growth of p — every slope eventually dominated — is the
/// finite-horizon face of the density-0 characterization.
pub fn linear_domination_check(
    s: &BitSequence,
    slopes: &[Rational],
    n_max: u64,
    search_horizon: u64,
) -> Result<Vec<SlopeReport>> {
    if slopes.iter().any(|k| *k <= Rational::new(0, 1)) {
        return Err(Error::Parameter("slopes must be positive".into()));
    }
    let table = principal_function(s, n_max, search_horizon)?;
    Ok(slopes
        .iter()
        .map(|&slope| {
            let num = *slope.numer() as u128;
            let den = *slope.denom() as u128;
            let mut last = None;
            for (n, p) in table.iter() {
                // p ≤ (num/den)·n  ⟺  p·den ≤ num·n, exactly.
                if p as u128 * den <= num * n as u128 {
                    last = Some(n);
                }
            }
            SlopeReport {
                slope,
                last_crossing: last,
                checked_to: n_max,
            }
        })
        .collect())
}

/// A factorial interval [n!, (n+1)!) that `s` misses entirely, with the exact
/// partial density at the interval's right endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorialWitness {
    pub n: u64,
    /// ρ at horizon (n+1)!; at most 1/n whenever the interval is empty.
    pub density: PartialDensity,
}

/// Scans the factorial intervals [n!, (n+1)!) for 2 ≤ n ≤ n_max and returns
/// each empty one with its endpoint density. n = 1 is excluded: [1!, 2!) is
/// the singleton {1}, for which the 1/n bound is vacuous. Desk-scale bound
/// n_max ≤ 12: the scan runs to (n_max+1)!.
pub fn factorial_array_witnesses(
    s: &BitSequence,
    n_max: u64,
) -> Result<Vec<FactorialWitness>> {
    if !(2..=12).contains(&n_max) {
        return Err(Error::Parameter(format!(
            "factorial witness n_max {n_max} outside 2..=12"
        )));
    }
    let end = factorial(n_max + 1);
    let mut witnesses = Vec::new();
    let mut count = 0u64;
    let mut block = 2u64; // current interval is [block!, (block+1)!)
    let mut block_count = 0u64;
    for x in 0..end {
        if x >= factorial(block + 1) {
            if block_count == 0 {
                witnesses.push(FactorialWitness {
                    n: block,
                    density: PartialDensity::new(count, factorial(block + 1))?,
                });
            }
            block += 1;
            block_count = 0;
        }
        if s.bit(x)? {
            count += 1;
            if x >= factorial(block) {
                block_count += 1;
            }
        }
    }
    if block_count == 0 {
        witnesses.push(FactorialWitness {
            n: block,
            density: PartialDensity::new(count, factorial(block + 1))?,
        });
    }
    Ok(witnesses)
}

/// Partial densities of `s` split by residue class mod `m`.
#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub horizon: u64,
    pub modulus: u64,
    /// classes[i] = ρ_horizon(s ∩ {km + i}); the counts sum to the total.
    pub classes: Vec<PartialDensity>,
    pub total: PartialDensity,
    /// Residue with the largest share (smallest index on ties).
    pub max_residue: u64,
}

/// Splits ρ_horizon(s) across residue classes mod m in one pass. The class
/// densities sum to the total exactly, since every member lands in exactly
/// one class.
pub fn finite_partition_bound(
    s: &BitSequence,
    m: u64,
    horizon: u64,
) -> Result<PartitionReport> {
    if m < 2 {
        return Err(Error::Parameter("partition modulus must be ≥ 2".into()));
    }
    if horizon == 0 {
        return Err(Error::Parameter("partition horizon must be ≥ 1".into()));
    }
    let mut counts = vec![0u64; m as usize];
    let mut total = 0u64;
    for k in 0..horizon {
        if s.bit(k)? {
            counts[(k % m) as usize] += 1;
            total += 1;
        }
    }
    let max_residue = (0..m as usize)
        .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
        .unwrap() as u64;
    Ok(PartitionReport {
        horizon,
        modulus: m,
        classes: counts
            .iter()
            .map(|&c| PartialDensity::new(c, horizon))
            .collect::<Result<_>>()?,
        total: PartialDensity::new(total, horizon)?,
        max_residue,
    })
}
