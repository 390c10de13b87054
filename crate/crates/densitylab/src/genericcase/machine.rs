//! The toy register machine and its program numbering.
//!
//! A program code is a Cantor pair (core, pad): the core number decodes
//! through a list bijection into instructions, and the pad is carried but
//! ignored by the semantics. Padding is therefore a total computable map
//! producing unboundedly many distinct codes with identical behavior, and
//! behavioral equivalence between two padded siblings is visible
//! syntactically (equal cores) — no halting analysis required.
//!
//! Three instructions: INC r, DECJZ r label (jump on zero, else decrement),
//! HALT. Registers hold unbounded naturals, input and output live in
//! register 0, and running off the end of the core halts.

use crate::error::{Error, Result};
use crate::seq::isqrt;

/// Cantor pair (a+b)(a+b+1)/2 + b, checked into the u64 code space.
pub fn pair(a: u64, b: u64) -> Result<u64> {
    let s = a as u128 + b as u128;
    let v = s * (s + 1) / 2 + b as u128;
    u64::try_from(v)
        .map_err(|_| Error::Parameter(format!("pair({a},{b}) exceeds the code space")))
}

/// Inverse of `pair`; total on u64.
pub fn unpair(n: u64) -> (u64, u64) {
    let w = (isqrt(8 * n as u128 + 1) - 1) / 2;
    let t = (w * (w + 1) / 2) as u64;
    let b = n - t;
    (w as u64 - b, b)
}

/// Total bijection between naturals and finite sequences of naturals:
/// 0 is the empty list, and n+1 splits as (head, encoded tail).
pub fn decode_list(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while n > 0 {
        let (h, t) = unpair(n - 1);
        out.push(h);
        n = t;
    }
    out
}

/// Inverse of `decode_list`.
pub fn encode_list(items: &[u64]) -> Result<u64> {
    let mut n = 0u64;
    for &h in items.iter().rev() {
        n = pair(h, n)?
            .checked_add(1)
            .ok_or_else(|| Error::Parameter("list code exceeds the code space".into()))?;
    }
    Ok(n)
}

/// One machine instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instr {
    Halt,
    /// Increment the register.
    Inc(u64),
    /// If the register is zero jump to the label, else decrement and fall
    /// through.
    Decjz(u64, u64),
}

/// Total decoding of one instruction number.
pub fn decode_instr(m: u64) -> Instr {
    if m == 0 {
        return Instr::Halt;
    }
    if m % 2 == 1 {
        Instr::Inc((m - 1) / 2)
    } else {
        let (reg, label) = unpair((m - 2) / 2);
        Instr::Decjz(reg, label)
    }
}

/// Inverse of `decode_instr`.
pub fn encode_instr(i: Instr) -> Result<u64> {
    Ok(match i {
        Instr::Halt => 0,
        Instr::Inc(r) => r
            .checked_mul(2)
            .and_then(|x| x.checked_add(1))
            .ok_or_else(|| Error::Parameter("instruction exceeds the code space".into()))?,
        Instr::Decjz(r, l) => pair(r, l)?
            .checked_mul(2)
            .and_then(|x| x.checked_add(2))
            .ok_or_else(|| Error::Parameter("instruction exceeds the code space".into()))?,
    })
}

/// A decoded program: its code, its instruction core, and the pad the
/// semantics ignore.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyProgram {
    pub code: u64,
    pub core_code: u64,
    pub core: Vec<Instr>,
    pub pad: u64,
}

/// Total bijective enumeration of programs.
pub fn enumerate_program(n: u64) -> ToyProgram {
    let (core_code, pad) = unpair(n);
    let core = decode_list(core_code).into_iter().map(decode_instr).collect();
    ToyProgram {
        code: n,
        core_code,
        core,
        pad,
    }
}

/// Re-encodes (core_code, pad) into a program code.
pub fn encode_program(core_code: u64, pad: u64) -> Result<u64> {
    pair(core_code, pad)
}

/// The core number of a program code.
pub fn core_code_of(code: u64) -> u64 {
    unpair(code).0
}

/// The pad of a program code.
pub fn pad_of(code: u64) -> u64 {
    unpair(code).1
}

/// Outcome of a budgeted run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Halted { output: u64, steps: u64 },
    Pending,
}

/// Largest register index the core names; registers beyond it can never be
/// touched, so the store is a dense vector of this size.
fn register_span(core: &[Instr]) -> usize {
    core.iter()
        .map(|i| match *i {
            Instr::Halt => 0,
            Instr::Inc(r) => r + 1,
            Instr::Decjz(r, _) => r + 1,
        })
        .max()
        .unwrap_or(0)
        .max(1) as usize
}

/// Runs the core for at most `budget` steps with `input` in register 0.
/// Deterministic; noticing a halt (HALT or running off the end) costs one
/// step, so the empty core halts in exactly one step.
pub fn run(prog: &ToyProgram, input: u64, budget: u64) -> Result<RunOutcome> {
    if budget == 0 {
        return Err(Error::Parameter("run budget must be ≥ 1".into()));
    }
    let mut regs = vec![0u64; register_span(&prog.core)];
    regs[0] = input;
    let mut pc = 0u64;
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > budget {
            return Ok(RunOutcome::Pending);
        }
        let Some(&instr) = prog.core.get(pc as usize) else {
            return Ok(RunOutcome::Halted {
                output: regs[0],
                steps,
            });
        };
        match instr {
            Instr::Halt => {
                return Ok(RunOutcome::Halted {
                    output: regs[0],
                    steps,
                })
            }
            Instr::Inc(r) => {
                regs[r as usize] += 1;
                pc += 1;
            }
            Instr::Decjz(r, label) => {
                if regs[r as usize] == 0 {
                    pc = label;
                } else {
                    regs[r as usize] -= 1;
                    pc += 1;
                }
            }
        }
    }
}

/// Classification of a budgeted run with loop detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Halting,
    /// An exact machine state recurred: a sound divergence certificate.
    Diverging,
    Undecided,
}

/// Like `run` on input 0, but also certifies divergence when the exact
/// machine state (pc plus registers, trailing zeros trimmed) recurs within
/// the budget. Sound and incomplete: slow drifts stay undecided.
pub fn classify_on_zero(prog: &ToyProgram, budget: u64) -> Result<Classification> {
    if budget == 0 {
        return Err(Error::Parameter("classification budget must be ≥ 1".into()));
    }
    let mut regs = vec![0u64; register_span(&prog.core)];
    let mut pc = 0u64;
    let mut seen: std::collections::HashSet<(u64, Box<[u64]>)> =
        std::collections::HashSet::new();
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > budget {
            return Ok(Classification::Undecided);
        }
        let trimmed_len = regs.iter().rposition(|&r| r != 0).map_or(0, |i| i + 1);
        if !seen.insert((pc, regs[..trimmed_len].into())) {
            return Ok(Classification::Diverging);
        }
        let Some(&instr) = prog.core.get(pc as usize) else {
            return Ok(Classification::Halting);
        };
        match instr {
            Instr::Halt => return Ok(Classification::Halting),
            Instr::Inc(r) => {
                regs[r as usize] += 1;
                pc += 1;
            }
            Instr::Decjz(r, label) => {
                if regs[r as usize] == 0 {
                    pc = label;
                } else {
                    regs[r as usize] -= 1;
                    pc += 1;
                }
            }
        }
    }
}

/// x_{e,i}: the i-th padded sibling of program e. Sibling 0 is e itself;
/// siblings i ≥ 1 walk the nonzero pads other than e's own, so they are
/// pairwise distinct, distinct from e, share e's core, and never use pad 0
/// (pad-0 codes are reserved waste for the adversary allocation).
pub fn padding_enumeration(e: u64, i: u64) -> Result<u64> {
    if i == 0 {
        return Ok(e);
    }
    let (core_code, own_pad) = unpair(e);
    let pad = if own_pad == 0 || i < own_pad {
        i
    } else {
        i + 1
    };
    pair(core_code, pad)
}
