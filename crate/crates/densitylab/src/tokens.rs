//! Text tokens for sets, permutations, injections, and budgeted
//! descriptions, as used by the command-line interface.
//!
//! Tokens are head-driven: the first segment names a constructor and fixes
//! how many further segments it consumes, so nested forms like
//! `orbit:arithmetic:3:0:squares` or `compose:blockshuffle:7,identity`
//! parse without quoting. `:` and `,` both separate segments; fractions
//! are written `num/den` inside a single segment.

use crate::construct::build_prescribed_density;
use crate::error::{Error, Result};
use crate::genericcase::{adversary_permutation, PartialDescription};
use crate::permute::{
    block_shuffle, compose, identity, identity_injection, injection_to_permutation,
    offset_injection, orbit_permutation, scale_injection, square_injection,
    ComputableInjection, ComputablePermutation,
};
use crate::seq::{complement, prng_sequence, standard_set, BitSequence, Seed, StandardSet};
use crate::Rational;

/// One-screen grammar reference, echoed in usage errors.
pub const TOKEN_GRAMMAR: &str = "\
set        := evens | squares | tower | factorialgaps | omega | empty
            | arithmetic:<modulus>:<residue> | dyadic:<exponent>
            | prng:<seed> | prescribed:<lower>:<upper> | complement:<set>
permutation:= identity | adversary | blockshuffle:<seed>
            | orbit:<set>:<set> | inj2perm:<injection>
            | compose:<permutation>,<permutation>
injection  := identity | square | scale:<m> | offset:<c>
description:= total:<set> | stalled:<set>:<trap-set>
fractions  := <num>/<den> or a bare integer";

struct Cursor<'a> {
    original: &'a str,
    segments: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(token: &'a str) -> Result<Self> {
        let segments: Vec<&str> = token.split([':', ',']).collect();
        if segments.iter().any(|s| s.is_empty()) {
            return Err(Error::Parameter(format!(
                "empty segment in token '{token}'\n{TOKEN_GRAMMAR}"
            )));
        }
        Ok(Cursor {
            original: token,
            segments,
            pos: 0,
        })
    }

    fn next(&mut self, expected: &str) -> Result<&'a str> {
        let seg = self.segments.get(self.pos).copied().ok_or_else(|| {
            Error::Parameter(format!(
                "token '{}' ends where {expected} was expected\n{TOKEN_GRAMMAR}",
                self.original
            ))
        })?;
        self.pos += 1;
        Ok(seg)
    }

    fn next_u64(&mut self, expected: &str) -> Result<u64> {
        let seg = self.next(expected)?;
        seg.parse().map_err(|_| {
            Error::Parameter(format!(
                "segment '{seg}' in '{}' is not a number ({expected})\n{TOKEN_GRAMMAR}",
                self.original
            ))
        })
    }

    fn next_fraction(&mut self, expected: &str) -> Result<Rational> {
        let seg = self.next(expected)?;
        let parse_part = |part: &str| -> Result<i64> {
            part.parse().map_err(|_| {
                Error::Parameter(format!(
                    "'{seg}' in '{}' is not a fraction ({expected})\n{TOKEN_GRAMMAR}",
                    self.original
                ))
            })
        };
        match seg.split_once('/') {
            None => Ok(Rational::from_integer(parse_part(seg)?)),
            Some((num, den)) => {
                let (num, den) = (parse_part(num)?, parse_part(den)?);
                if den == 0 {
                    return Err(Error::Parameter(format!(
                        "zero denominator in '{seg}' of '{}'",
                        self.original
                    )));
                }
                Ok(Rational::new(num, den))
            }
        }
    }

    fn finish(self) -> Result<()> {
        if self.pos == self.segments.len() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "trailing segments after position {} in token '{}'\n{TOKEN_GRAMMAR}",
                self.pos, self.original
            )))
        }
    }
}

fn set_from(cursor: &mut Cursor) -> Result<BitSequence> {
    let head = cursor.next("a set token")?;
    match head {
        "evens" => standard_set(StandardSet::Evens),
        "squares" => standard_set(StandardSet::Squares),
        "tower" => standard_set(StandardSet::Tower),
        "factorialgaps" => standard_set(StandardSet::FactorialGaps),
        "omega" => Ok(crate::seq::omega()),
        "empty" => Ok(crate::seq::empty()),
        "arithmetic" => {
            let modulus = cursor.next_u64("a modulus")?;
            let residue = cursor.next_u64("a residue")?;
            standard_set(StandardSet::Arithmetic { modulus, residue })
        }
        "dyadic" => {
            let exponent = cursor.next_u64("an exponent")?;
            let exponent = u32::try_from(exponent)
                .map_err(|_| Error::Parameter(format!("exponent {exponent} out of range")))?;
            standard_set(StandardSet::Dyadic { exponent })
        }
        "prng" => Ok(prng_sequence(Seed(cursor.next_u64("a seed")?))),
        "prescribed" => {
            let lower = cursor.next_fraction("a lower density")?;
            let upper = cursor.next_fraction("an upper density")?;
            build_prescribed_density(lower, upper)
        }
        "complement" => Ok(complement(&set_from(cursor)?)),
        other => Err(Error::Parameter(format!(
            "unknown set token '{other}' in '{}'\n{TOKEN_GRAMMAR}",
            cursor.original
        ))),
    }
}

fn injection_from(cursor: &mut Cursor) -> Result<ComputableInjection> {
    let head = cursor.next("an injection token")?;
    match head {
        "identity" => Ok(identity_injection()),
        "square" => Ok(square_injection()),
        "scale" => scale_injection(cursor.next_u64("a factor")?),
        "offset" => Ok(offset_injection(cursor.next_u64("an offset")?)),
        other => Err(Error::Parameter(format!(
            "unknown injection token '{other}' in '{}'\n{TOKEN_GRAMMAR}",
            cursor.original
        ))),
    }
}

fn permutation_from(cursor: &mut Cursor) -> Result<ComputablePermutation> {
    let head = cursor.next("a permutation token")?;
    match head {
        "identity" => Ok(identity()),
        "adversary" => Ok(adversary_permutation()),
        "blockshuffle" => Ok(block_shuffle(Seed(cursor.next_u64("a seed")?))),
        "orbit" => {
            let a = set_from(cursor)?;
            let b = set_from(cursor)?;
            Ok(orbit_permutation(&a, &b))
        }
        "inj2perm" => Ok(injection_to_permutation(&injection_from(cursor)?)),
        "compose" => {
            let outer = permutation_from(cursor)?;
            let inner = permutation_from(cursor)?;
            Ok(compose(&outer, &inner))
        }
        other => Err(Error::Parameter(format!(
            "unknown permutation token '{other}' in '{}'\n{TOKEN_GRAMMAR}",
            cursor.original
        ))),
    }
}

fn description_from(cursor: &mut Cursor) -> Result<PartialDescription> {
    let head = cursor.next("a description token")?;
    match head {
        "total" => Ok(PartialDescription::total(&set_from(cursor)?)),
        "stalled" => {
            let inner = PartialDescription::total(&set_from(cursor)?);
            let trap = set_from(cursor)?;
            Ok(inner.diverging_on(&trap))
        }
        other => Err(Error::Parameter(format!(
            "unknown description token '{other}' in '{}'\n{TOKEN_GRAMMAR}",
            cursor.original
        ))),
    }
}

pub fn parse_set(token: &str) -> Result<BitSequence> {
    let mut cursor = Cursor::new(token)?;
    let set = set_from(&mut cursor)?;
    cursor.finish()?;
    Ok(set)
}

pub fn parse_injection(token: &str) -> Result<ComputableInjection> {
    let mut cursor = Cursor::new(token)?;
    let injection = injection_from(&mut cursor)?;
    cursor.finish()?;
    Ok(injection)
}

pub fn parse_permutation(token: &str) -> Result<ComputablePermutation> {
    let mut cursor = Cursor::new(token)?;
    let permutation = permutation_from(&mut cursor)?;
    cursor.finish()?;
    Ok(permutation)
}

pub fn parse_description(token: &str) -> Result<PartialDescription> {
    let mut cursor = Cursor::new(token)?;
    let description = description_from(&mut cursor)?;
    cursor.finish()?;
    Ok(description)
}

/// Parses a whole `--perms` argument: one or more permutation tokens
/// back to back, e.g. `identity,blockshuffle:7,orbit:squares:evens`.
pub fn parse_permutation_list(tokens: &str) -> Result<Vec<ComputablePermutation>> {
    let mut cursor = Cursor::new(tokens)?;
    let mut out = Vec::new();
    while cursor.pos < cursor.segments.len() {
        out.push(permutation_from(&mut cursor)?);
    }
    Ok(out)
}

/// A checkpoint schedule request, e.g. `geometric:1.1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleSpec {
    Geometric { ratio: f64 },
}

impl ScheduleSpec {
    pub fn checkpoints(self, limit: u64) -> Result<Vec<u64>> {
        match self {
            ScheduleSpec::Geometric { ratio } => crate::density::geometric_schedule(limit, ratio),
        }
    }
}

pub fn parse_schedule(token: &str) -> Result<ScheduleSpec> {
    match token.split_once(':') {
        Some(("geometric", ratio)) => {
            let ratio: f64 = ratio.parse().map_err(|_| {
                Error::Parameter(format!("schedule ratio '{ratio}' is not a number"))
            })?;
            Ok(ScheduleSpec::Geometric { ratio })
        }
        _ => Err(Error::Parameter(format!(
            "unknown schedule '{token}'; use geometric:<ratio>"
        ))),
    }
}
