//! Computable injections and permutations over the naturals, set images and
//! sampled subsequences, and the constructive transformations between them.
//!
//! Trust model: an injection or permutation wraps caller-supplied code, so
//! nothing here assumes the closures behave. Injections carry a growing
//! seen-map and fault on the first repeated image; permutations round-trip
//! every evaluated point through both directions and fault on disagreement.
//! A returned value is therefore certified for the prefix actually
//! evaluated, never beyond it.
//!
//! Two constructions are sequential-by-nature and memoize their frontier
//! behind a mutex: `injection_to_permutation` (fill the least unused value
//! at square positions, pass the injection through elsewhere) and
//! `orbit_permutation` (match k-th member to k-th member, k-th non-member
//! to k-th non-member). Reads below the frontier are pure lookups, so
//! concurrent readers are safe; a single writer extends the frontier.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use crate::construct::build_prescribed_density;
use crate::error::{Error, Result};
use crate::seq::{isqrt, keyed_word, BitSequence, Seed, SeqKind};
use crate::Rational;

type IndexFn = dyn Fn(u64) -> Result<u64> + Send + Sync;

/// A total injection ℕ → ℕ, policed by a seen-map: evaluating the same
/// image from two distinct arguments is a hard error.
#[derive(Clone)]
pub struct ComputableInjection {
    forward: Arc<IndexFn>,
    seen: Arc<Mutex<HashMap<u64, u64>>>,
    label: String,
}

impl ComputableInjection {
    pub fn new(
        label: impl Into<String>,
        forward: impl Fn(u64) -> Result<u64> + Send + Sync + 'static,
    ) -> Self {
        ComputableInjection {
            forward: Arc::new(forward),
            seen: Arc::new(Mutex::new(HashMap::new())),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates the injection and records the image. Clones share the
    /// seen-map, so a violation is caught across all users of this injection.
    pub fn apply(&self, n: u64) -> Result<u64> {
        let image = (self.forward)(n)?;
        let mut seen = self.seen.lock().expect("injection seen-map lock");
        match seen.insert(image, n) {
            Some(first) if first != n => Err(Error::InjectivityViolation {
                label: self.label.clone(),
                first,
                second: n,
                image,
            }),
            _ => Ok(image),
        }
    }
}

/// A computable permutation of ℕ with both directions supplied. Every
/// evaluation round-trips: `apply` checks inverse(forward(n)) = n and
/// `unapply` checks forward(inverse(n)) = n.
#[derive(Clone)]
pub struct ComputablePermutation {
    forward: Arc<IndexFn>,
    inverse: Arc<IndexFn>,
    label: String,
}

impl ComputablePermutation {
    pub fn new(
        label: impl Into<String>,
        forward: impl Fn(u64) -> Result<u64> + Send + Sync + 'static,
        inverse: impl Fn(u64) -> Result<u64> + Send + Sync + 'static,
    ) -> Self {
        ComputablePermutation {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// π(n), certified by a round-trip through the inverse.
    pub fn apply(&self, n: u64) -> Result<u64> {
        let image = (self.forward)(n)?;
        let back = (self.inverse)(image)?;
        if back != n {
            return Err(Error::PermutationIntegrity {
                label: self.label.clone(),
                index: n,
            });
        }
        Ok(image)
    }

    /// π⁻¹(n), certified by a round-trip through the forward direction.
    pub fn unapply(&self, n: u64) -> Result<u64> {
        let pre = (self.inverse)(n)?;
        let image = (self.forward)(pre)?;
        if image != n {
            return Err(Error::PermutationIntegrity {
                label: self.label.clone(),
                index: n,
            });
        }
        Ok(pre)
    }

    /// An injection view sharing this permutation's forward direction.
    pub fn as_injection(&self) -> ComputableInjection {
        let clone = self.clone();
        ComputableInjection::new(self.label.clone(), move |n| clone.apply(n))
    }
}

/// The identity permutation.
pub fn identity() -> ComputablePermutation {
    ComputablePermutation::new("identity", Ok, Ok)
}

/// π⁻¹ as a permutation: directions swapped.
pub fn invert(p: &ComputablePermutation) -> ComputablePermutation {
    ComputablePermutation {
        forward: Arc::clone(&p.inverse),
        inverse: Arc::clone(&p.forward),
        label: format!("invert({})", p.label),
    }
}

/// outer ∘ inner: `inner` is applied first.
pub fn compose(
    outer: &ComputablePermutation,
    inner: &ComputablePermutation,
) -> ComputablePermutation {
    let f_out = Arc::clone(&outer.forward);
    let f_in = Arc::clone(&inner.forward);
    let i_out = Arc::clone(&outer.inverse);
    let i_in = Arc::clone(&inner.inverse);
    ComputablePermutation::new(
        format!("compose({},{})", outer.label, inner.label),
        move |n| f_out(f_in(n)?),
        move |n| i_in(i_out(n)?),
    )
}

// ---------------------------------------------------------------------------
// Block shuffle
// ---------------------------------------------------------------------------

/// Keyed bijection on the offsets [0, 2^k) of block k: four alternating
/// XOR rounds between the low k/2 bits and the rest. Each round XORs one
/// half with a mix of the other, so replaying rounds in reverse order
/// inverts exactly, for every k ≥ 1 including the degenerate one-bit block.
fn block_mix(seed: u64, k: u32, t: u64, decode: bool) -> u64 {
    let h = k / 2;
    let mask_lo = (1u64 << h) - 1;
    let mask_hi = (1u64 << (k - h)) - 1;
    let mut lo = t & mask_lo;
    let mut hi = t >> h;
    let rounds: [u32; 4] = if decode { [3, 2, 1, 0] } else { [0, 1, 2, 3] };
    for r in rounds {
        let key = keyed_word(seed, (k as u64) << 8 | r as u64);
        if r % 2 == 0 {
            hi ^= crate::seq::mix_with(lo, key) & mask_hi;
        } else {
            lo ^= crate::seq::mix_with(hi, key) & mask_lo;
        }
    }
    hi << h | lo
}

/// A seeded permutation fixing every dyadic block [2^k, 2^{k+1}) setwise
/// (and the singletons 0 and 1 pointwise). Closed-form in both directions:
/// no tables, O(1) per evaluation.
pub fn block_shuffle(seed: Seed) -> ComputablePermutation {
    let label = format!("blockshuffle:{}", seed.0);
    let s = seed.0;
    let fwd = move |n: u64| {
        if n < 2 {
            return Ok(n);
        }
        let k = 63 - n.leading_zeros();
        let base = 1u64 << k;
        Ok(base + block_mix(s, k, n - base, false))
    };
    let inv = move |n: u64| {
        if n < 2 {
            return Ok(n);
        }
        let k = 63 - n.leading_zeros();
        let base = 1u64 << k;
        Ok(base + block_mix(s, k, n - base, true))
    };
    ComputablePermutation::new(label, fwd, inv)
}

// ---------------------------------------------------------------------------
// Rank/select cache
// ---------------------------------------------------------------------------

/// Incrementally filled packed-bit view of a sequence with per-word
/// cumulative rank, supporting rank and select in both senses.
struct BitCache {
    words: Vec<u64>,
    /// ones_before[i] = set bits in words[..i]; parallel to `words`.
    ones_before: Vec<u64>,
    len: u64,
    ones: u64,
}

impl BitCache {
    fn new() -> Self {
        BitCache {
            words: Vec::new(),
            ones_before: Vec::new(),
            len: 0,
            ones: 0,
        }
    }

    fn fill_to(&mut self, s: &BitSequence, n: u64) -> Result<()> {
        while self.len < n {
            let idx = (self.len / 64) as usize;
            if idx == self.words.len() {
                self.words.push(0);
                self.ones_before.push(self.ones);
            }
            if s.bit(self.len)? {
                self.words[idx] |= 1u64 << (self.len % 64);
                self.ones += 1;
            }
            self.len += 1;
        }
        Ok(())
    }

    fn bit(&self, n: u64) -> bool {
        self.words[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    /// Set bits strictly below x; requires the cache filled to x.
    fn rank1(&self, x: u64) -> u64 {
        let w = (x / 64) as usize;
        let mut r = if w < self.ones_before.len() {
            self.ones_before[w]
        } else {
            self.ones
        };
        if !x.is_multiple_of(64) {
            r += (self.words[w] & ((1u64 << (x % 64)) - 1)).count_ones() as u64;
        }
        r
    }

    fn rank0(&self, x: u64) -> u64 {
        x - self.rank1(x)
    }

    /// Ones in words[..i] when `want_ones`, else zeros in words[..i].
    fn count_before_word(&self, i: usize, want_ones: bool) -> u64 {
        if want_ones {
            self.ones_before[i]
        } else {
            i as u64 * 64 - self.ones_before[i]
        }
    }

    /// Position of the j-th (0-indexed) bit of the wanted polarity, filling
    /// from `s` as needed but never past `cap`. `None` when the cap is hit
    /// first; the caller owns the error report.
    fn select(
        &mut self,
        s: &BitSequence,
        j: u64,
        want_ones: bool,
        cap: u64,
    ) -> Result<Option<u64>> {
        loop {
            let have = if want_ones { self.ones } else { self.len - self.ones };
            if have > j {
                // Last word whose preceding count is ≤ j; the j-th bit of
                // this polarity lies inside it.
                let mut lo = 0usize;
                let mut hi = self.words.len();
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if self.count_before_word(mid, want_ones) <= j {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                let w = lo - 1;
                let mut remaining = j - self.count_before_word(w, want_ones);
                for b in 0..64u64 {
                    let pos = w as u64 * 64 + b;
                    if pos >= self.len {
                        break;
                    }
                    if self.bit(pos) == want_ones {
                        if remaining == 0 {
                            return Ok(Some(pos));
                        }
                        remaining -= 1;
                    }
                }
                unreachable!("counted bit not found in its word");
            }
            if self.len >= cap {
                return Ok(None);
            }
            let target = (self.len + 4096).min(cap);
            self.fill_to(s, target)?;
        }
    }
}

// ---------------------------------------------------------------------------
// Orbit permutation
// ---------------------------------------------------------------------------

struct OrbitState {
    a: BitCache,
    b: BitCache,
}

/// Default working horizon for orbit constructions: searches for matching
/// members/non-members never scan past this index.
pub const DEFAULT_ORBIT_HORIZON: u64 = 1 << 26;

/// The canonical orbit map between two sets: k-th member of `a` ↦ k-th
/// member of `b`, k-th non-member ↦ k-th non-member. Searches are capped at
/// `working_horizon`; exhausting either side first is an insufficient-set
/// error, which is how a finite or co-finite input surfaces.
pub fn orbit_permutation_capped(
    a: &BitSequence,
    b: &BitSequence,
    working_horizon: u64,
) -> ComputablePermutation {
    let label = format!("orbit({},{})", a.label(), b.label());
    let state = Arc::new(Mutex::new(OrbitState {
        a: BitCache::new(),
        b: BitCache::new(),
    }));
    let transfer = move |state: &Arc<Mutex<OrbitState>>,
                         from: &BitSequence,
                         to: &BitSequence,
                         a_to_b: bool,
                         label: &str,
                         n: u64|
          -> Result<u64> {
        let mut guard = state.lock().expect("orbit state lock");
        let st = &mut *guard;
        let (src, dst) = if a_to_b {
            (&mut st.a, &mut st.b)
        } else {
            (&mut st.b, &mut st.a)
        };
        src.fill_to(from, n + 1)?;
        let member = src.bit(n);
        let k = if member { src.rank1(n) } else { src.rank0(n) };
        match dst.select(to, k, member, working_horizon)? {
            Some(pos) => Ok(pos),
            None => Err(Error::InsufficientSet {
                label: label.to_string(),
                what: if member { "members" } else { "non-members" },
                requested: k,
                found: if member {
                    dst.ones
                } else {
                    dst.len - dst.ones
                },
                horizon: working_horizon,
            }),
        }
    };
    let fwd = {
        let state = Arc::clone(&state);
        let (a, b, label) = (a.clone(), b.clone(), label.clone());
        move |n: u64| transfer(&state, &a, &b, true, &label, n)
    };
    let inv = {
        let state = Arc::clone(&state);
        let (a, b, label) = (a.clone(), b.clone(), label.clone());
        move |n: u64| transfer(&state, &b, &a, false, &label, n)
    };
    ComputablePermutation::new(label, fwd, inv)
}

/// `orbit_permutation_capped` with the default working horizon.
pub fn orbit_permutation(a: &BitSequence, b: &BitSequence) -> ComputablePermutation {
    orbit_permutation_capped(a, b, DEFAULT_ORBIT_HORIZON)
}

// ---------------------------------------------------------------------------
// Images and sampled subsequences
// ---------------------------------------------------------------------------

/// π(S): membership of n in the image is membership of π⁻¹(n) in s.
pub fn image_set(p: &ComputablePermutation, s: &BitSequence) -> BitSequence {
    let label = format!("image({},{})", p.label(), s.label());
    let p = p.clone();
    let s = s.clone();
    BitSequence::new(SeqKind::Derived, label, move |n| s.bit(p.unapply(n)?))
}

/// The subsequence of `s` sampled along the injection: bit(n) = s(p(n)).
pub fn sampled_subsequence(p: &ComputableInjection, s: &BitSequence) -> BitSequence {
    let label = format!("sampled({},{})", p.label(), s.label());
    let p = p.clone();
    let s = s.clone();
    BitSequence::new(SeqKind::Derived, label, move |n| s.bit(p.apply(n)?))
}

// ---------------------------------------------------------------------------
// Injection → permutation
// ---------------------------------------------------------------------------

fn is_square(n: u64) -> bool {
    let r = isqrt(n as u128) as u64;
    r * r == n
}

struct AssignState {
    /// pi[j] for all j below the frontier, assigned in increasing j.
    pi: Vec<u64>,
    /// Inverse of the assignment so far.
    inv: HashMap<u64, u64>,
    used: HashSet<u64>,
    /// Least value not yet assigned.
    mex: u64,
}

impl AssignState {
    /// Extends the assignment through index `to`. Rule, per position j:
    /// at a non-square j whose injection value is still unused, take it;
    /// otherwise take the least unused value. Square positions are the
    /// designated mop-up slots that make the result onto.
    fn advance(&mut self, p: &ComputableInjection, to: u64) -> Result<()> {
        while (self.pi.len() as u64) <= to {
            let j = self.pi.len() as u64;
            let mut value = None;
            if !is_square(j) {
                let v = p.apply(j)?;
                if !self.used.contains(&v) {
                    value = Some(v);
                }
            }
            let v = value.unwrap_or(self.mex);
            self.used.insert(v);
            self.inv.insert(v, j);
            self.pi.push(v);
            while self.used.contains(&self.mex) {
                self.mex += 1;
            }
        }
        Ok(())
    }
}

/// Rebuilds a total injection into a bijection: pass the injection through
/// on non-square positions when its value is free, and fill the least
/// unassigned value otherwise. The square positions guarantee every value
/// is eventually taken, and the prefix counts of the bijection's image and
/// the injection's image differ by at most ⌈√n⌉ below any n.
///
/// Both directions replay the sequential assignment up to the needed
/// frontier and memoize it. The inverse of v is always assigned by step
/// (v+2)², so its replay is bounded.
pub fn injection_to_permutation(p: &ComputableInjection) -> ComputablePermutation {
    let label = format!("inj2perm({})", p.label());
    let state = Arc::new(Mutex::new(AssignState {
        pi: Vec::new(),
        inv: HashMap::new(),
        used: HashSet::new(),
        mex: 0,
    }));
    let fwd = {
        let state = Arc::clone(&state);
        let p = p.clone();
        move |n: u64| {
            let mut st = state.lock().expect("assignment lock");
            st.advance(&p, n)?;
            Ok(st.pi[n as usize])
        }
    };
    let inv = {
        let state = Arc::clone(&state);
        let p = p.clone();
        move |v: u64| {
            let mut st = state.lock().expect("assignment lock");
            if let Some(&j) = st.inv.get(&v) {
                return Ok(j);
            }
            let cap = ((v as u128 + 2) * (v as u128 + 2)).min(u64::MAX as u128) as u64;
            while (st.pi.len() as u64) <= cap {
                let next = st.pi.len() as u64;
                st.advance(&p, next)?;
                if let Some(&j) = st.inv.get(&v) {
                    return Ok(j);
                }
            }
            Err(Error::ConstructionBug(format!(
                "value {v} not assigned within {cap} steps of the fill-in rule"
            )))
        }
    };
    ComputablePermutation::new(label, fwd, inv)
}

/// Outcome of `verify_density_transfer`: the largest observed gap between
/// the two sampled densities and how much of the 2/√n allowance it used.
#[derive(Clone, Copy, Debug)]
pub struct DensityTransferReport {
    pub horizon: u64,
    pub max_abs_difference: f64,
    pub max_abs_difference_at: u64,
    /// Worst |Δρ|·√n/2 over the range; < 1 is the guarantee.
    pub max_bound_fraction: f64,
    pub max_bound_fraction_at: u64,
}

/// Checks |ρ_n(sampled(π, s)) − ρ_n(sampled(p, s))| < 2/√n for every
/// 1 ≤ n ≤ horizon, where π is `injection_to_permutation(p)`. The check is
/// exact — (Δcount)² < 4n in integers — and a violation is a construction
/// bug, not a tolerance failure.
pub fn verify_density_transfer(
    p: &ComputableInjection,
    s: &BitSequence,
    horizon: u64,
) -> Result<DensityTransferReport> {
    if horizon < 4 {
        return Err(Error::Parameter(format!(
            "density transfer horizon {horizon} < 4"
        )));
    }
    let pi = injection_to_permutation(p);
    let mut count_pi = 0u64;
    let mut count_p = 0u64;
    let mut report = DensityTransferReport {
        horizon,
        max_abs_difference: 0.0,
        max_abs_difference_at: 1,
        max_bound_fraction: 0.0,
        max_bound_fraction_at: 1,
    };
    for n in 1..=horizon {
        let j = n - 1;
        if s.bit(pi.apply(j)?)? {
            count_pi += 1;
        }
        if s.bit(p.apply(j)?)? {
            count_p += 1;
        }
        let diff = count_pi.abs_diff(count_p);
        if (diff as u128).pow(2) >= 4 * n as u128 {
            return Err(Error::ConstructionBug(format!(
                "sampled densities differ by {diff}/{n}, breaching 2/√n"
            )));
        }
        let abs = diff as f64 / n as f64;
        if abs > report.max_abs_difference {
            report.max_abs_difference = abs;
            report.max_abs_difference_at = n;
        }
        let fraction = diff as f64 / (2.0 * (n as f64).sqrt());
        if fraction > report.max_bound_fraction {
            report.max_bound_fraction = fraction;
            report.max_bound_fraction_at = n;
        }
    }
    Ok(report)
}

/// Orbit map from `a` onto a set built with the prescribed lower/upper
/// density pair; the image of `a` under the result carries those densities.
pub fn density_shift(
    a: &BitSequence,
    lower: Rational,
    upper: Rational,
) -> Result<ComputablePermutation> {
    let target = build_prescribed_density(lower, upper)?;
    Ok(orbit_permutation(a, &target))
}

// ---------------------------------------------------------------------------
// Library injections
// ---------------------------------------------------------------------------

/// The identity as an injection.
pub fn identity_injection() -> ComputableInjection {
    ComputableInjection::new("identity", Ok)
}

/// p(n) = m·n for m ≥ 1.
pub fn scale_injection(m: u64) -> Result<ComputableInjection> {
    if m == 0 {
        return Err(Error::Parameter("scale factor must be ≥ 1".into()));
    }
    Ok(ComputableInjection::new(format!("scale:{m}"), move |n| {
        n.checked_mul(m)
            .ok_or_else(|| Error::Parameter(format!("{m}·{n} exceeds the index range")))
    }))
}

/// p(n) = n + c.
pub fn offset_injection(c: u64) -> ComputableInjection {
    ComputableInjection::new(format!("offset:{c}"), move |n| {
        n.checked_add(c)
            .ok_or_else(|| Error::Parameter(format!("{n}+{c} exceeds the index range")))
    })
}

/// p(n) = n².
pub fn square_injection() -> ComputableInjection {
    ComputableInjection::new("square", |n| {
        n.checked_mul(n)
            .ok_or_else(|| Error::Parameter(format!("{n}² exceeds the index range")))
    })
}

/// The stock adversarial battery: structurally varied total injections for
/// density-transfer and stochasticity checks.
pub fn injection_battery() -> Vec<ComputableInjection> {
    vec![
        identity_injection(),
        offset_injection(7),
        scale_injection(2).expect("constant factor"),
        scale_injection(3).expect("constant factor"),
        square_injection(),
    ]
}
