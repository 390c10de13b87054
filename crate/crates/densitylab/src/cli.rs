//! Command-line front end: argument parsing, experiment dispatch, CSV and
//! manifest emission.
//!
//! Every run is deterministic given its flags: the same configuration,
//! seeds, and tool version produce byte-identical CSV files. Alongside
//! each CSV the run writes a `<file>.manifest.json` recording the command
//! line, a config digest, seeds, horizons, timestamps, and outputs (the
//! timestamps vary between runs; the CSV bytes do not).
//!
//! Exit codes: 0 on success, 1 when a check or bound fails at runtime
//! (including I/O failures), 2 on usage errors such as malformed tokens.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::density::{density_profile, estimate_limits, PartialDensity};
use crate::error::{Error, Result};
use crate::genericcase::machine::{classify_on_zero, core_code_of, enumerate_program};
use crate::genericcase::{
    adversary_permutation, decide_from_generic, permutation_battery, triviality_census,
    Classification, ConsistencyOutcome, EntryResult, PartialBit, PartialDescription,
};
use crate::permute::{image_set, verify_density_transfer};
use crate::seq::Seed;
use crate::stochastic::{mutual_intersection_experiment, nested_construction, thinning_experiment};
use crate::tokens::{
    parse_description, parse_injection, parse_permutation, parse_permutation_list, parse_schedule,
    parse_set, TOKEN_GRAMMAR,
};

/// Default seed for seeded experiments when neither a flag nor the
/// `DENSITYLAB_SEED` environment variable supplies one.
pub const DEFAULT_SEED: u64 = 42;

const PROFILE_CSV_HEADER: &str = "checkpoint,count,density_exact_num,density_exact_den,density_float";
const CENSUS_CSV_HEADER: &str =
    "horizon,budget,halting,diverging,undecided,decided_density_num,decided_density_den";

#[derive(Parser)]
#[command(
    name = "densitylab",
    version,
    about = "Exact asymptotic-density experiments on subsets of the naturals",
    after_long_help = TOKEN_GRAMMAR
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density measurements along a checkpoint schedule.
    Density {
        #[command(subcommand)]
        command: DensityCommand,
    },
    /// Permutation images and injection-transfer verification.
    Permute {
        #[command(subcommand)]
        command: PermuteCommand,
    },
    /// Seeded stochasticity experiments.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Bounded-budget halting census over all program codes below a horizon.
    Census(CensusArgs),
    /// Generic-case batteries and the dovetailed decision procedure.
    Igc {
        #[command(subcommand)]
        command: IgcCommand,
    },
    /// Run one invariant check per module at small horizons.
    Selfcheck,
}

#[derive(Subcommand)]
enum DensityCommand {
    /// Exact partial densities of a set at scheduled checkpoints.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Set token, e.g. evens, arithmetic:3:0, prescribed:1/3:2/3.
    #[arg(long)]
    set: String,
    /// Largest checkpoint.
    #[arg(long)]
    to: u64,
    /// Checkpoint schedule, geometric:<ratio>.
    #[arg(long, default_value = "geometric:1.1")]
    schedule: String,
    /// Write the profile as CSV (plus a .manifest.json sidecar).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PermuteCommand {
    /// Density profile of a permuted set.
    Image(ImageArgs),
    /// Verify the sampled-density transfer bound for an injection.
    Transfer(TransferArgs),
}

#[derive(Args)]
struct ImageArgs {
    /// Permutation token, e.g. blockshuffle:7 or orbit:evens:squares.
    #[arg(long)]
    perm: String,
    #[arg(long)]
    set: String,
    #[arg(long)]
    to: u64,
    #[arg(long, default_value = "geometric:1.1")]
    schedule: String,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TransferArgs {
    /// Injection token: identity, square, scale:<m>, offset:<c>.
    #[arg(long)]
    injection: String,
    #[arg(long)]
    set: String,
    /// Check the bound at every n up to this horizon.
    #[arg(long)]
    to: u64,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Select positions of a seeded random set by membership in a fixed set.
    Thinning(ThinningArgs),
    /// Density of the mutual intersection of k seeded random sets.
    Intersect(IntersectArgs),
    /// Iterated random refinement with per-level witnesses.
    Nested(NestedArgs),
}

#[derive(Args)]
struct ThinningArgs {
    #[arg(long)]
    set: String,
    /// Seed for the random set (default: $DENSITYLAB_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    to: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct IntersectArgs {
    /// Number of sets intersected.
    #[arg(long)]
    k: u32,
    /// Exactly k distinct seeds, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    to: u64,
}

#[derive(Args)]
struct NestedArgs {
    /// Number of refinement levels J.
    #[arg(long)]
    levels: u64,
    /// Exactly J+1 seeds, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    to: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long)]
    horizon: u64,
    /// Step budget per program.
    #[arg(long)]
    budget: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum IgcCommand {
    /// Check a budgeted description against each permuted set.
    Battery(BatteryArgs),
    /// Decide one program index from a budgeted description of the
    /// permuted halting set.
    Decide(DecideArgs),
}

#[derive(Args)]
struct BatteryArgs {
    /// Description token: total:<set> or stalled:<set>:<trap>.
    #[arg(long)]
    description: String,
    /// The base set the description claims to describe.
    #[arg(long)]
    set: String,
    /// Permutation tokens, comma-separated.
    #[arg(long)]
    perms: String,
    #[arg(long)]
    to: u64,
    #[arg(long)]
    budget: u64,
}

#[derive(Args)]
struct DecideArgs {
    /// Program index to decide (kept small: preimages are found by replay).
    #[arg(long)]
    e: u64,
    /// Strictly increasing step budgets, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<u64>,
}

/// Maps a library error to the process exit code.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) => 2,
        _ => 1,
    }
}

/// Parses `args` and runs the selected command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &argv, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(command: Command, argv: &[String], out: &mut dyn Write) -> Result<()> {
    let started = unix_millis();
    match command {
        Command::Density {
            command: DensityCommand::Profile(args),
        } => cmd_profile(args, argv, started, out),
        Command::Permute { command } => match command {
            PermuteCommand::Image(args) => cmd_image(args, argv, started, out),
            PermuteCommand::Transfer(args) => cmd_transfer(args, out),
        },
        Command::Experiment { command } => match command {
            ExperimentCommand::Thinning(args) => cmd_thinning(args, argv, started, out),
            ExperimentCommand::Intersect(args) => cmd_intersect(args, out),
            ExperimentCommand::Nested(args) => cmd_nested(args, argv, started, out),
        },
        Command::Census(args) => cmd_census(args, argv, started, out),
        Command::Igc { command } => match command {
            IgcCommand::Battery(args) => cmd_battery(args, out),
            IgcCommand::Decide(args) => cmd_decide(args, out),
        },
        Command::Selfcheck => crate::selfcheck::run(out),
    }
}

fn cmd_profile(args: ProfileArgs, argv: &[String], started: u128, out: &mut dyn Write) -> Result<()> {
    let set = parse_set(&args.set)?;
    let schedule = parse_schedule(&args.schedule)?.checkpoints(args.to)?;
    let profile = density_profile(&set, &schedule)?;
    say(out, format_args!("set {}  checkpoints {}", set.label(), schedule.len()))?;
    print_profile(profile.values(), out)?;
    if profile.values().len() >= 2 {
        let limits = estimate_limits(&profile)?;
        say(
            out,
            format_args!(
                "tail estimate: min {:.6}  max {:.6}",
                rational_f64(limits.lower),
                rational_f64(limits.upper)
            ),
        )?;
    }
    if let Some(path) = args.csv {
        let rows = profile_rows(profile.values());
        write_csv(&path, PROFILE_CSV_HEADER, &rows)?;
        write_manifest(&path, argv, &[], &[args.to], started)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn cmd_image(args: ImageArgs, argv: &[String], started: u128, out: &mut dyn Write) -> Result<()> {
    let perm = parse_permutation(&args.perm)?;
    let base = parse_set(&args.set)?;
    let image = image_set(&perm, &base);
    let schedule = parse_schedule(&args.schedule)?.checkpoints(args.to)?;
    let profile = density_profile(&image, &schedule)?;
    say(
        out,
        format_args!("image of {} under {}", base.label(), perm.label()),
    )?;
    print_profile(profile.values(), out)?;
    if let Some(path) = args.csv {
        let rows = profile_rows(profile.values());
        write_csv(&path, PROFILE_CSV_HEADER, &rows)?;
        write_manifest(&path, argv, &[], &[args.to], started)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn cmd_transfer(args: TransferArgs, out: &mut dyn Write) -> Result<()> {
    let injection = parse_injection(&args.injection)?;
    let set = parse_set(&args.set)?;
    let report = verify_density_transfer(&injection, &set, args.to)?;
    say(
        out,
        format_args!(
            "sampled-density bound held at every n in 1..={}",
            report.horizon
        ),
    )?;
    say(
        out,
        format_args!(
            "max |Δρ| {:.6} at n={}  worst bound fraction {:.6} at n={}",
            report.max_abs_difference,
            report.max_abs_difference_at,
            report.max_bound_fraction,
            report.max_bound_fraction_at
        ),
    )?;
    Ok(())
}

fn cmd_thinning(args: ThinningArgs, argv: &[String], started: u128, out: &mut dyn Write) -> Result<()> {
    let set = parse_set(&args.set)?;
    let seed = args.seed.unwrap_or_else(default_seed);
    let report = thinning_experiment(&set, Seed(seed), args.to)?;
    say(out, format_args!("set {}  seed {}  horizon {}", set.label(), seed, report.horizon))?;
    say(out, format_args!("rho(A) = {}  ({:.6})", report.rho_a, report.rho_a.as_f64()))?;
    say(
        out,
        format_args!("rho(A∩B) = {}  ({:.6})", report.rho_ab, report.rho_ab.as_f64()),
    )?;
    match report.ratio {
        Some(r) => say(
            out,
            format_args!("count ratio |A∩B|/|A| = {}/{} ({:.6})", r.numer(), r.denom(), rational_f64(r)),
        )?,
        None => say(out, format_args!("count ratio undefined: A empty below horizon"))?,
    }
    say(
        out,
        format_args!(
            "selection rule {}: {} selected, {} ones",
            report.selection.rule_label, report.selection.selected, report.selection.selected_ones
        ),
    )?;
    if let Some(path) = args.csv {
        let rows = profile_rows(&report.profile);
        write_csv(&path, PROFILE_CSV_HEADER, &rows)?;
        write_manifest(&path, argv, &[seed], &[args.to], started)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn cmd_intersect(args: IntersectArgs, out: &mut dyn Write) -> Result<()> {
    let seeds: Vec<Seed> = args.seeds.iter().copied().map(Seed).collect();
    let report = mutual_intersection_experiment(args.k, &seeds, args.to)?;
    say(out, format_args!("k {}  horizon {}", report.k, report.horizon))?;
    say(
        out,
        format_args!("density {} ({:.6})", report.density, report.density.as_f64()),
    )?;
    say(
        out,
        format_args!(
            "target {}/{} ({:.6})  deviation {:.6}",
            report.target.numer(),
            report.target.denom(),
            rational_f64(report.target),
            report.deviation
        ),
    )?;
    Ok(())
}

fn cmd_nested(args: NestedArgs, argv: &[String], started: u128, out: &mut dyn Write) -> Result<()> {
    if args.seeds.len() as u64 != args.levels + 1 {
        return Err(Error::Parameter(format!(
            "{} levels need {} seeds, got {}",
            args.levels,
            args.levels + 1,
            args.seeds.len()
        )));
    }
    let seeds: Vec<Seed> = args.seeds.iter().copied().map(Seed).collect();
    let report = nested_construction(&seeds, args.to)?;
    say(out, format_args!("levels {}  horizon {}", args.levels, args.to))?;
    say(out, format_args!("cuts {:?}", report.cuts))?;
    say(out, format_args!("witnesses {:?}", report.witnesses))?;
    let last = report.profile.last();
    say(out, format_args!("final density {} ({:.6})", last, last.as_f64()))?;
    if let Some(path) = args.csv {
        let rows = profile_rows(report.profile.values());
        write_csv(&path, PROFILE_CSV_HEADER, &rows)?;
        write_manifest(&path, argv, &args.seeds, &[args.to], started)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn cmd_census(args: CensusArgs, argv: &[String], started: u128, out: &mut dyn Write) -> Result<()> {
    let report = triviality_census(args.horizon, args.budget)?;
    let decided = report.decided_density();
    say(
        out,
        format_args!("horizon {}  budget {}", report.horizon, report.budget),
    )?;
    say(
        out,
        format_args!(
            "halting {}  diverging {}  undecided {}",
            report.halting, report.diverging, report.undecided
        ),
    )?;
    say(
        out,
        format_args!(
            "decided density {}/{} ({:.6})",
            decided.numer(),
            decided.denom(),
            rational_f64(decided)
        ),
    )?;
    if let Some(path) = args.csv {
        let row = format!(
            "{},{},{},{},{},{},{}",
            report.horizon,
            report.budget,
            report.halting,
            report.diverging,
            report.undecided,
            decided.numer(),
            decided.denom()
        );
        write_csv(&path, CENSUS_CSV_HEADER, &[row])?;
        write_manifest(&path, argv, &[], &[args.horizon], started)?;
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn cmd_battery(args: BatteryArgs, out: &mut dyn Write) -> Result<()> {
    let description = parse_description(&args.description)?;
    let base = parse_set(&args.set)?;
    let perms = parse_permutation_list(&args.perms)?;
    let report = permutation_battery(&description, &base, &perms, args.to, args.budget)?;
    say(out, format_args!("note: {}", report.caveat))?;
    say(
        out,
        format_args!(
            "description {}  set {}  horizon {}  budget {}",
            description.label(),
            base.label(),
            report.horizon,
            report.budget
        ),
    )?;
    for entry in &report.entries {
        match &entry.result {
            EntryResult::Evaluated {
                domain_density,
                consistency,
                queries,
            } => {
                let verdict = match consistency {
                    ConsistencyOutcome::Pass => "consistent".to_string(),
                    ConsistencyOutcome::ViolationAt(n) => format!("VIOLATION at {n}"),
                };
                let queries = match queries {
                    Some(q) => format!("  queries {}/{}", q.forward, q.backward),
                    None => String::new(),
                };
                say(
                    out,
                    format_args!(
                        "{}: domain {} ({:.6})  {}{}",
                        entry.label,
                        domain_density,
                        domain_density.as_f64(),
                        verdict,
                        queries
                    ),
                )?;
            }
            EntryResult::Failed { message } => {
                say(out, format_args!("{}: failed: {}", entry.label, message))?;
            }
        }
    }
    if report.all_consistent() {
        Ok(())
    } else {
        Err(Error::CheckFailed(
            "battery found inconsistent or failed entries".into(),
        ))
    }
}

fn cmd_decide(args: DecideArgs, out: &mut dyn Write) -> Result<()> {
    let pi = adversary_permutation();
    let psi = PartialDescription::new("budgeted halting image", move |k, t| {
        let code = pi.unapply(k)?;
        Ok(match classify_on_zero(&enumerate_program(code), t)? {
            Classification::Halting => PartialBit::One,
            Classification::Diverging => PartialBit::Zero,
            Classification::Undecided => PartialBit::Pending,
        })
    });
    let halts = decide_from_generic(&psi, args.e, &args.budgets)?;
    let verdict = if halts { "halts" } else { "diverges" };
    say(
        out,
        format_args!(
            "index {} (core {}) {} on input 0",
            args.e,
            core_code_of(args.e),
            verdict
        ),
    )?;
    Ok(())
}

fn default_seed() -> u64 {
    std::env::var("DENSITYLAB_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

fn unix_millis() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(format_args!("{line}\n")).map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn rational_f64(r: crate::Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn print_profile(values: &[PartialDensity], out: &mut dyn Write) -> Result<()> {
    for d in values {
        say(
            out,
            format_args!("checkpoint {}: {} ({:.6})", d.horizon(), d, d.as_f64()),
        )?;
    }
    Ok(())
}

fn profile_rows(values: &[PartialDensity]) -> Vec<String> {
    values
        .iter()
        .map(|d| {
            let v = d.value();
            format!(
                "{},{},{},{},{:.6}",
                d.horizon(),
                d.count(),
                v.numer(),
                v.denom(),
                d.as_f64()
            )
        })
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes header + rows with LF endings and a trailing newline.
fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err(path))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command_line: &'a [String],
    config_digest: String,
    seeds: &'a [u64],
    horizons: &'a [u64],
    started_unix_ms: u128,
    finished_unix_ms: u128,
    outputs: Vec<String>,
    tool_version: &'static str,
}

/// FNV-1a over the command line; stable across runs of the same config.
fn config_digest(argv: &[String]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for arg in argv {
        for byte in arg.bytes().chain([0x1f]) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{hash:016x}")
}

fn write_manifest(
    csv_path: &Path,
    argv: &[String],
    seeds: &[u64],
    horizons: &[u64],
    started: u128,
) -> Result<()> {
    let manifest = RunManifest {
        command_line: argv,
        config_digest: config_digest(argv),
        seeds,
        horizons,
        started_unix_ms: started,
        finished_unix_ms: unix_millis(),
        outputs: vec![csv_path.display().to_string()],
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    let mut path = csv_path.as_os_str().to_owned();
    path.push(".manifest.json");
    let path = PathBuf::from(path);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Parameter(format!("manifest serialization: {e}")))?;
    std::fs::write(&path, json).map_err(io_err(&path))
}
