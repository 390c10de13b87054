//! End-to-end checks of the command-line binary: exit codes, byte-stable CSV
//! output, run manifests, and the environment seed override.

use std::path::Path;
use std::process::{Command, Output};

fn densitylab(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_densitylab"));
    // Isolate from the ambient environment; individual tests opt back in.
    cmd.env_remove("DENSITYLAB_SEED");
    cmd.args(args);
    cmd
}

fn run_ok(args: &[&str]) -> Output {
    let out = densitylab(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed with {}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let out = densitylab(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn profile_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        run_ok(&[
            "density",
            "profile",
            "--set",
            "prescribed:1/3:2/3",
            "--to",
            "65536",
            "--csv",
            path.to_str().unwrap(),
        ]);
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "repeat runs differ");

    let text = std::str::from_utf8(&bytes[0]).unwrap();
    assert!(
        text.starts_with("checkpoint,count,density_exact_num,density_exact_den,density_float\n"),
        "unexpected header in {text:.120}"
    );
    assert!(!text.contains('\r'), "CSV should use bare LF line endings");
    assert!(text.ends_with('\n'), "CSV should end with a newline");
}

#[test]
fn manifest_sits_next_to_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("evens.csv");
    run_ok(&[
        "density",
        "profile",
        "--set",
        "evens",
        "--to",
        "4096",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let manifest_path = dir.path().join("evens.csv.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();

    let words: Vec<&str> = manifest["command_line"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(words.contains(&"profile"), "command line missing: {words:?}");
    assert!(!manifest["config_digest"].as_str().unwrap().is_empty());
    assert!(manifest["horizons"]
        .as_array()
        .unwrap()
        .contains(&serde_json::json!(4096)));
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    let started = manifest["started_unix_ms"].as_u64().unwrap();
    let finished = manifest["finished_unix_ms"].as_u64().unwrap();
    assert!(started <= finished);
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(
        outputs.iter().any(|o| Path::new(o).file_name() == csv.file_name()),
        "outputs {outputs:?} missing the CSV"
    );
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["density", "profile", "--set", "evens", "--to", "0"][..],
        &["density", "profile", "--set", "no-such-set", "--to", "64"],
        &["igc", "decide", "--e", "3", "--budgets", "10,5"],
        &["density", "profile", "--set", "arithmetic:0:0", "--to", "64"],
    ] {
        let (code, stderr) = exit_code(args);
        assert_eq!(code, 2, "{args:?} should be a usage error: {stderr}");
        assert!(!stderr.is_empty(), "{args:?} gave no diagnostic");
    }
    // Missing subcommand is a usage error straight from the parser.
    let (code, _) = exit_code(&[]);
    assert_eq!(code, 2);
}

#[test]
fn failed_checks_exit_one() {
    // The description claims the evens while the base set is the squares:
    // the battery must flag the mismatch and fail the run.
    let out = densitylab(&[
        "igc",
        "battery",
        "--description",
        "total:evens",
        "--set",
        "squares",
        "--perms",
        "identity",
        "--to",
        "64",
        "--budget",
        "1",
    ])
    .output()
    .unwrap();
    assert_eq!(out.status.code().unwrap(), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("VIOLATION"),
        "expected a violation report, got: {stdout}"
    );
}

#[test]
fn unwritable_csv_exits_one() {
    let (code, stderr) = exit_code(&[
        "census",
        "--horizon",
        "100",
        "--budget",
        "10",
        "--csv",
        "/no/such/directory/census.csv",
    ]);
    assert_eq!(code, 1, "I/O failure should exit 1: {stderr}");
    assert!(stderr.contains("error"), "missing diagnostic: {stderr}");
}

#[test]
fn help_exits_zero() {
    let out = run_ok(&["--help"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("density"), "help text looks wrong: {stdout}");
}

#[test]
fn environment_seed_fills_in_for_the_flag() {
    let flagged = run_ok(&[
        "experiment",
        "thinning",
        "--set",
        "evens",
        "--seed",
        "9",
        "--to",
        "2000",
    ]);
    let from_env = densitylab(&["experiment", "thinning", "--set", "evens", "--to", "2000"])
        .env("DENSITYLAB_SEED", "9")
        .output()
        .unwrap();
    assert!(from_env.status.success());
    assert_eq!(
        flagged.stdout, from_env.stdout,
        "environment seed should act exactly like --seed"
    );

    // An explicit flag wins over the environment.
    let flag_wins = densitylab(&[
        "experiment",
        "thinning",
        "--set",
        "evens",
        "--seed",
        "4",
        "--to",
        "2000",
    ])
    .env("DENSITYLAB_SEED", "9")
    .output()
    .unwrap();
    let plain = run_ok(&[
        "experiment",
        "thinning",
        "--set",
        "evens",
        "--seed",
        "4",
        "--to",
        "2000",
    ]);
    assert_eq!(flag_wins.stdout, plain.stdout);
}

#[test]
fn selfcheck_reports_every_module() {
    let out = run_ok(&["selfcheck"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for prefix in [
        "seq.", "density.", "permute.", "construct.", "stochastic.", "machine.", "genericcase.",
        "tokens.",
    ] {
        assert!(
            stdout.contains(&format!("ok {prefix}")),
            "selfcheck output missing {prefix}: {stdout}"
        );
    }
}
