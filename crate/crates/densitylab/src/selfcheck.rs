//! A fast invariant sweep across every module, used by the `selfcheck`
//! subcommand and by integration tests.
//!
//! Each check exercises one guarantee at a deliberately small horizon and
//! prints an `ok <name>` line; the first failure aborts the sweep with the
//! underlying error. The sweep is meant to finish in seconds, not to
//! replace the full test suite.

use std::io::Write;

use crate::construct::{build_prescribed_density, oscillation_schedule};
use crate::density::{partial_density, principal_function};
use crate::error::{Error, Result};
use crate::genericcase::machine::{encode_program, enumerate_program, run as run_program};
use crate::genericcase::{
    adversary_permutation, decide_from_generic, demand_exponent, permutation_battery,
    triviality_census, PartialDescription,
};
use crate::permute::{
    block_shuffle, compose, invert, scale_injection, verify_density_transfer,
};
use crate::seq::{complement, prng_sequence, standard_set, Seed, StandardSet};
use crate::stochastic::{after_one_rule, select, thinning_experiment};
use crate::tokens::{parse_permutation, parse_set};
use crate::Rational;

fn bug(name: &str, detail: String) -> Error {
    Error::ConstructionBug(format!("selfcheck {name}: {detail}"))
}

fn check_prng_reproducible() -> Result<()> {
    let a = prng_sequence(Seed(7));
    let b = prng_sequence(Seed(7));
    for n in 0..4096 {
        if a.bit(n)? != b.bit(n)? {
            return Err(bug("prng", format!("seed 7 differs at {n}")));
        }
    }
    Ok(())
}

fn check_standard_sets_match_definitions() -> Result<()> {
    let evens = standard_set(StandardSet::Evens)?;
    let squares = standard_set(StandardSet::Squares)?;
    let dyadic = standard_set(StandardSet::Dyadic { exponent: 2 })?;
    let mut next_square = 0u64;
    let mut root = 0u64;
    for n in 0..512u64 {
        if evens.bit(n)? != (n % 2 == 0) {
            return Err(bug("sets", format!("evens wrong at {n}")));
        }
        if n == next_square {
            if !squares.bit(n)? {
                return Err(bug("sets", format!("squares misses {n}")));
            }
            root += 1;
            next_square = root * root;
        } else if squares.bit(n)? {
            return Err(bug("sets", format!("squares claims {n}")));
        }
        let in_class = n != 0 && n.trailing_zeros() == 2;
        if dyadic.bit(n)? != in_class {
            return Err(bug("sets", format!("dyadic:2 wrong at {n}")));
        }
    }
    Ok(())
}

fn check_complement_counts_sum() -> Result<()> {
    let s = prng_sequence(Seed(3));
    let c = complement(&s);
    let n = 1000;
    let total = partial_density(&s, n)?.count() + partial_density(&c, n)?.count();
    if total != n {
        return Err(bug("density", format!("counts sum to {total}, not {n}")));
    }
    Ok(())
}

fn check_principal_identity() -> Result<()> {
    let squares = standard_set(StandardSet::Squares)?;
    let table = principal_function(&squares, 40, 10_000)?;
    for n in 1..=40u64 {
        let p = table
            .get(n)
            .ok_or_else(|| bug("density", format!("no table entry for {n}")))?;
        let count = partial_density(&squares, p)?.count();
        if count != n {
            return Err(bug("density", format!("count at p({n})={p} is {count}")));
        }
    }
    Ok(())
}

fn check_permutation_roundtrips() -> Result<()> {
    let p = block_shuffle(Seed(9));
    let id = compose(&p, &invert(&p));
    for n in 0..1024 {
        // apply() certifies its own round-trip internally.
        if p.unapply(p.apply(n)?)? != n || id.apply(n)? != n {
            return Err(bug("permute", format!("round-trip broke at {n}")));
        }
    }
    Ok(())
}

fn check_transfer_bound() -> Result<()> {
    // The hard 2/√n bound is asserted inside; any breach surfaces as an error.
    verify_density_transfer(
        &scale_injection(2)?,
        &standard_set(StandardSet::Evens)?,
        512,
    )?;
    Ok(())
}

fn check_prescribed_regimes() -> Result<()> {
    let half = build_prescribed_density(Rational::new(1, 2), Rational::new(1, 2))?;
    for n in 0..16 {
        if half.bit(n)? != (n % 2 == 1) {
            return Err(bug("construct", format!("density-1/2 set wrong at {n}")));
        }
    }
    let quarter = build_prescribed_density(Rational::new(1, 4), Rational::new(1, 4))?;
    let mut count = 0i64;
    for n in 1..=2048i64 {
        if quarter.bit(n as u64 - 1)? {
            count += 1;
        }
        if (4 * count - n).abs() >= 4 {
            return Err(bug("construct", format!("quarter discrepancy at {n}")));
        }
    }
    Ok(())
}

fn check_oscillation_switches() -> Result<()> {
    let schedule = oscillation_schedule(Rational::new(1, 3), Rational::new(2, 3), 20_000)?;
    if schedule.boundaries.len() < 3 {
        return Err(bug("construct", "fewer than 3 switches".into()));
    }
    if !schedule.boundaries.windows(2).all(|w| w[0] < w[1]) {
        return Err(bug("construct", "switch boundaries not increasing".into()));
    }
    Ok(())
}

fn check_thinning_factorization() -> Result<()> {
    let a = standard_set(StandardSet::Arithmetic {
        modulus: 3,
        residue: 0,
    })?;
    // The exact count factorization is re-verified at every step internally.
    let report = thinning_experiment(&a, Seed(11), 5000)?;
    if report.ratio.is_none() {
        return Err(bug("stochastic", "selection came up empty".into()));
    }
    Ok(())
}

fn check_selection_commits_before_reveal() -> Result<()> {
    let report = select(&after_one_rule(), &prng_sequence(Seed(13)), 4000)?;
    // The rule keeps positions right after an observed one: about half.
    if !(1000..3000).contains(&report.selected) {
        return Err(bug(
            "stochastic",
            format!("after-one rule selected {}", report.selected),
        ));
    }
    Ok(())
}

fn check_pad_invariance() -> Result<()> {
    for core in 0..40u64 {
        let plain = run_program(&enumerate_program(encode_program(core, 0)?), 0, 64)?;
        let padded = run_program(&enumerate_program(encode_program(core, 4)?), 0, 64)?;
        if plain != padded {
            return Err(bug("machine", format!("pad changed behavior of core {core}")));
        }
    }
    Ok(())
}

fn check_census_partition() -> Result<()> {
    let report = triviality_census(2000, 50)?;
    if report.halting + report.diverging + report.undecided != report.horizon {
        return Err(bug("census", "counts do not partition the horizon".into()));
    }
    Ok(())
}

fn check_adversary_allocation() -> Result<()> {
    let pi = adversary_permutation();
    let mut seen = std::collections::HashSet::new();
    for n in 0..1500u64 {
        // unapply certifies the forward round-trip internally.
        if !seen.insert(pi.unapply(n)?) {
            return Err(bug("adversary", format!("repeated preimage at {n}")));
        }
    }
    for n in (2..128u64).step_by(2) {
        let e = demand_exponent(n).expect("even n ≥ 2 is a demand");
        let code = pi.unapply(n)?;
        if crate::genericcase::machine::core_code_of(code)
            != crate::genericcase::machine::core_code_of(e)
        {
            return Err(bug("adversary", format!("core mismatch at slot {n}")));
        }
    }
    Ok(())
}

fn check_battery_consistency() -> Result<()> {
    let squares = standard_set(StandardSet::Squares)?;
    let perms = vec![crate::permute::identity(), block_shuffle(Seed(5))];
    let f = PartialDescription::total(&squares);
    let report = permutation_battery(&f, &squares, &perms, 512, 1)?;
    if !report.all_consistent() {
        return Err(bug("battery", "pushed description disagreed".into()));
    }
    Ok(())
}

fn check_decision_dovetails() -> Result<()> {
    let class = standard_set(StandardSet::Dyadic { exponent: 3 })?;
    let psi = PartialDescription::total(&class);
    if !decide_from_generic(&psi, 2, &[1, 2])? {
        return Err(bug("decision", "class indicator not recognized".into()));
    }
    let mute = PartialDescription::new("mute", |_n, _t| Ok(crate::genericcase::PartialBit::Pending));
    match decide_from_generic(&mute, 2, &[1, 2]) {
        Err(Error::Timeout { .. }) => Ok(()),
        other => Err(bug("decision", format!("mute description gave {other:?}"))),
    }
}

fn check_token_grammar() -> Result<()> {
    parse_permutation("orbit:arithmetic:3:0:squares")?;
    parse_set("prescribed:1/3:2/3")?;
    if parse_set("nonsense").is_ok() {
        return Err(bug("tokens", "junk token accepted".into()));
    }
    Ok(())
}

/// Runs every check, printing one `ok` line per pass to `out`.
pub fn run(out: &mut dyn Write) -> Result<()> {
    type Check = (&'static str, fn() -> Result<()>);
    let checks: Vec<Check> = vec![
        ("seq.prng-reproducible", check_prng_reproducible),
        ("seq.standard-sets-match-definitions", check_standard_sets_match_definitions),
        ("density.complement-counts-sum", check_complement_counts_sum),
        ("density.principal-identity", check_principal_identity),
        ("permute.roundtrips", check_permutation_roundtrips),
        ("permute.transfer-bound", check_transfer_bound),
        ("construct.prescribed-regimes", check_prescribed_regimes),
        ("construct.oscillation-switches", check_oscillation_switches),
        ("stochastic.thinning-factorization", check_thinning_factorization),
        ("stochastic.selection-sizes", check_selection_commits_before_reveal),
        ("machine.pad-invariance", check_pad_invariance),
        ("machine.census-partition", check_census_partition),
        ("genericcase.adversary-allocation", check_adversary_allocation),
        ("genericcase.battery-consistency", check_battery_consistency),
        ("genericcase.decision-dovetails", check_decision_dovetails),
        ("tokens.grammar", check_token_grammar),
    ];
    for (name, check) in checks {
        check()?;
        writeln!(out, "ok {name}").map_err(|source| Error::Io {
            path: "<selfcheck output>".into(),
            source,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selfcheck_passes_and_reports_every_module() {
        let mut out = Vec::new();
        run(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        for module in [
            "seq.", "density.", "permute.", "construct.", "stochastic.", "machine.",
            "genericcase.", "tokens.",
        ] {
            assert!(
                text.lines().any(|l| l.starts_with(&format!("ok {module}"))),
                "no check for {module}: {text}"
            );
        }
        assert_eq!(text.lines().count(), 16);
    }
}
