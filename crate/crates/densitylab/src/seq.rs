//! Total 0/1 sequences over the naturals, viewed as set indicators.
//!
//! A [`BitSequence`] wraps a total evaluator `index -> bit` together with a
//! label, a tag describing how bits are produced, and an optional known
//! density carried as metadata only — no computation ever consults it.
//!
//! Evaluators are pure: the same index always yields the same bit, and a
//! sequence may be shared freely across threads. Any memoization behind an
//! evaluator is behaviorally invisible.
//!
//! Pseudorandom sequences are keyed counter-mode generators: the bit at index
//! `n` is a pure function of `(seed, n)`, so bits can be read in any order
//! without replaying a stream, and identical seeds give identical bits on
//! every platform and run. They are surrogates: measured properties of these
//! sequences are evidence about the generator, never proofs about genuinely
//! random sets.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::Rational;

/// How a sequence produces its bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqKind {
    /// Membership follows a closed-form rule evaluated per index.
    ClosedForm,
    /// Bits come from a finite stored table; evaluation past it is an error.
    TableBacked,
    /// Bits come from a keyed pseudorandom generator.
    PrngBacked,
    /// Bits are computed from one or more underlying sequences.
    Derived,
}

/// Seed for keyed pseudorandom sequences and shuffles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl std::fmt::Display for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

type BitFn = dyn Fn(u64) -> Result<bool> + Send + Sync;

/// A total deterministic 0/1 sequence: the indicator of a subset of ℕ.
#[derive(Clone)]
pub struct BitSequence {
    eval: Arc<BitFn>,
    kind: SeqKind,
    label: String,
    known_density: Option<Rational>,
}

impl std::fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitSequence")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("known_density", &self.known_density)
            .finish()
    }
}

impl BitSequence {
    /// Wraps an evaluator. Use the module constructors for library sets.
    pub fn new(
        kind: SeqKind,
        label: impl Into<String>,
        eval: impl Fn(u64) -> Result<bool> + Send + Sync + 'static,
    ) -> Self {
        BitSequence {
            eval: Arc::new(eval),
            kind,
            label: label.into(),
            known_density: None,
        }
    }

    /// Attaches a known density as metadata. Computations never read it; it
    /// exists so reports can print the target a measurement should approach.
    pub fn with_known_density(mut self, d: Rational) -> Self {
        self.known_density = Some(d);
        self
    }

    /// The bit at `index`.
    pub fn bit(&self, index: u64) -> Result<bool> {
        (self.eval)(index)
    }

    pub fn kind(&self) -> SeqKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn known_density(&self) -> Option<Rational> {
        self.known_density
    }

    /// The first `n` bits as a string of `0`/`1` characters.
    pub fn prefix(&self, n: u64) -> Result<String> {
        let mut out = String::with_capacity(n as usize);
        for k in 0..n {
            out.push(if self.bit(k)? { '1' } else { '0' });
        }
        Ok(out)
    }
}

/// Names and parameters of the library sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardSet {
    /// Multiples of two.
    Evens,
    /// Perfect squares 0, 1, 4, 9, …
    Squares,
    /// The doubly exponential tower 2^(2^k): 2, 4, 16, 256, 65536, …
    Tower,
    /// Residue class {k·modulus + residue}.
    Arithmetic { modulus: u64, residue: u64 },
    /// Numbers with exactly `exponent` trailing binary zeros: {2^e·odd}.
    Dyadic { exponent: u32 },
    /// Blocks between consecutive factorials, alternating: [m!, (m+1)!) for
    /// even m. Oscillates between near-full and near-empty prefixes.
    FactorialGaps,
}

/// Builds a library set. Parameters are validated here; membership tests are
/// all O(1) per index.
pub fn standard_set(which: StandardSet) -> Result<BitSequence> {
    match which {
        StandardSet::Evens => Ok(BitSequence::new(SeqKind::ClosedForm, "evens", |n| {
            Ok(n % 2 == 0)
        })
        .with_known_density(Rational::new(1, 2))),
        StandardSet::Squares => Ok(BitSequence::new(SeqKind::ClosedForm, "squares", |n| {
            let r = n.isqrt();
            Ok(r * r == n)
        })
        .with_known_density(Rational::new(0, 1))),
        StandardSet::Tower => Ok(BitSequence::new(SeqKind::ClosedForm, "tower", |n| {
            Ok(n >= 2 && n.is_power_of_two() && (n.trailing_zeros() as u64).is_power_of_two())
        })
        .with_known_density(Rational::new(0, 1))),
        StandardSet::Arithmetic { modulus, residue } => {
            if modulus == 0 {
                return Err(Error::Parameter("arithmetic: modulus must be ≥ 1".into()));
            }
            if residue >= modulus {
                return Err(Error::Parameter(format!(
                    "arithmetic: residue {residue} must be < modulus {modulus}"
                )));
            }
            Ok(BitSequence::new(
                SeqKind::ClosedForm,
                format!("arithmetic:{modulus}:{residue}"),
                move |n| Ok(n % modulus == residue),
            )
            .with_known_density(Rational::new(1, modulus as i64)))
        }
        StandardSet::Dyadic { exponent } => {
            if exponent > 62 {
                return Err(Error::Parameter(format!(
                    "dyadic: exponent {exponent} out of range (≤ 62)"
                )));
            }
            Ok(BitSequence::new(
                SeqKind::ClosedForm,
                format!("dyadic:{exponent}"),
                move |n| Ok(n != 0 && n.trailing_zeros() == exponent),
            )
            .with_known_density(Rational::new(1, 1i64 << (exponent + 1))))
        }
        StandardSet::FactorialGaps => Ok(BitSequence::new(
            SeqKind::ClosedForm,
            "factorial_gaps",
            |n| Ok(factorial_block(n).map(|m| m % 2 == 0).unwrap_or(false)),
        )),
    }
}

/// Factorials that fit in a u64: 0! through 20!.
const FACTORIALS: [u64; 21] = {
    let mut t = [1u64; 21];
    let mut i = 1;
    while i < 21 {
        t[i] = t[i - 1] * i as u64;
        i += 1;
    }
    t
};

/// The factorial n! for n ≤ 20.
pub fn factorial(n: u64) -> u64 {
    FACTORIALS[n as usize]
}

/// The largest m with m! ≤ n, or None for n = 0 (below every factorial).
fn factorial_block(n: u64) -> Option<u64> {
    if n == 0 {
        return None;
    }
    // 20! is the largest factorial in u64 range, so every representable
    // n ≥ 20! lands in block 20.
    let m = FACTORIALS.iter().rposition(|&f| f <= n).unwrap();
    Some(m as u64)
}

/// Exact integer square root: the largest r with r² ≤ n.
pub(crate) fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    // Newton's iteration from a float seed; the loop settles in a few steps.
    // Clamped so the correction squares below stay inside u128.
    let mut x = ((n as f64).sqrt() as u128 + 1).min((1u128 << 64) - 1);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    while x * x > n {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit finalizer with full avalanche; the output scrambler of the
/// splitmix64 generator.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed scramble of `x`: full-avalanche mix of x ⊕ key.
pub(crate) fn mix_with(x: u64, key: u64) -> u64 {
    mix64(x ^ key)
}

/// Keyed counter-mode word: a pure function of (seed, index), identical on
/// every platform. Equivalent to reading the splitmix64 stream for a
/// seed-derived key at stream position `index`, which permits random access.
pub(crate) fn keyed_word(seed: u64, index: u64) -> u64 {
    let key = mix64(seed ^ GOLDEN);
    mix64(key
        .wrapping_add(GOLDEN)
        .wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Fair-coin pseudorandom sequence for `seed`. Counter-mode: the bit at `n`
/// never depends on other indices, so out-of-order evaluation is exact.
pub fn prng_sequence(seed: Seed) -> BitSequence {
    BitSequence::new(
        SeqKind::PrngBacked,
        format!("prng:{}", seed.0),
        move |n| Ok(keyed_word(seed.0, n) >> 63 == 1),
    )
    .with_known_density(Rational::new(1, 2))
}

/// A sequence backed by an explicit finite table. Evaluation at or past
/// `bits.len()` is a hard error, never an implicit zero.
pub fn table_sequence(label: impl Into<String>, bits: Vec<bool>) -> BitSequence {
    let label = label.into();
    let label2 = label.clone();
    BitSequence::new(SeqKind::TableBacked, label, move |n| {
        bits.get(n as usize).copied().ok_or(Error::HorizonExceeded {
            label: label2.clone(),
            horizon: bits.len() as u64,
            index: n,
        })
    })
}

/// The all-ones sequence ω.
pub fn omega() -> BitSequence {
    BitSequence::new(SeqKind::ClosedForm, "omega", |_| Ok(true))
        .with_known_density(Rational::new(1, 1))
}

/// The all-zeros sequence ∅.
pub fn empty() -> BitSequence {
    BitSequence::new(SeqKind::ClosedForm, "empty", |_| Ok(false))
        .with_known_density(Rational::new(0, 1))
}

/// Pointwise boolean combinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Intersect,
    Union,
    Complement,
}

/// Pointwise combination; `Complement` takes one argument, the others two.
pub fn combine(op: CombineOp, a: &BitSequence, b: Option<&BitSequence>) -> Result<BitSequence> {
    match (op, b) {
        (CombineOp::Complement, None) => Ok(complement(a)),
        (CombineOp::Intersect, Some(b)) => Ok(intersect(a, b)),
        (CombineOp::Union, Some(b)) => Ok(union(a, b)),
        (CombineOp::Complement, Some(_)) => {
            Err(Error::Parameter("complement takes one sequence".into()))
        }
        (op, None) => Err(Error::Parameter(format!("{op:?} takes two sequences"))),
    }
}

/// The set A ∩ B.
pub fn intersect(a: &BitSequence, b: &BitSequence) -> BitSequence {
    let (fa, fb) = (a.clone(), b.clone());
    BitSequence::new(
        SeqKind::Derived,
        format!("intersect({}, {})", a.label(), b.label()),
        move |n| Ok(fa.bit(n)? && fb.bit(n)?),
    )
}

/// The set A ∪ B.
pub fn union(a: &BitSequence, b: &BitSequence) -> BitSequence {
    let (fa, fb) = (a.clone(), b.clone());
    BitSequence::new(
        SeqKind::Derived,
        format!("union({}, {})", a.label(), b.label()),
        move |n| Ok(fa.bit(n)? || fb.bit(n)?),
    )
}

/// The set ω ∖ A.
pub fn complement(a: &BitSequence) -> BitSequence {
    let fa = a.clone();
    let seq = BitSequence::new(
        SeqKind::Derived,
        format!("complement({})", a.label()),
        move |n| Ok(!fa.bit(n)?),
    );
    match a.known_density() {
        Some(d) => seq.with_known_density(Rational::new(1, 1) - d),
        None => seq,
    }
}
