//! End-to-end tests of the `intruder` binary: exit codes, output shape and
//! JSON determinism.

use std::io::Write;
use std::process::{Command, Output};

fn intruder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intruder"))
        .args(args)
        .env_remove("INTRUDER_BOUND")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn normalize_and_exit_codes() {
    let out = intruder(&["normalize", "--builtin", "dy", "dec(enc(a,k),k)"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "a");
}

#[test]
fn saturate_dy_lists_the_saturated_system() {
    let out = intruder(&["saturate", "--builtin", "dy"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // ℒ₀ (7 rules) plus 7 derived rules.
    assert_eq!(text.lines().count(), 14, "{text}");
    assert!(text.contains("=> pair(X,Y)"));
}

#[test]
fn saturate_divergence_exits_2() {
    let out = intruder(&[
        "saturate", "--builtin", "blind", "--redundancy-steps", "0", "--bound", "64",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("diverged"));
}

#[test]
fn contracting_verdicts() {
    let out = intruder(&["contracting", "--builtin", "dy"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("contracting"));

    let out = intruder(&["contracting", "--builtin", "blind"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("not contracting"));
    assert!(text.contains("measure -1"), "{text}");
}

#[test]
fn solve_running_example() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "knows enc(s,k), k; deduce V").unwrap();
    writeln!(f, "eq V = s").unwrap();
    let path = f.path().to_str().unwrap();

    for extra in [&[][..], &["--subterm"][..]] {
        let mut args = vec!["solve", "--builtin", "dy", "--constraints", path];
        args.extend_from_slice(extra);
        let out = intruder(&args);
        assert_eq!(out.status.code(), Some(0), "{extra:?}");
        let text = stdout(&out);
        assert!(text.contains("Sat") && text.contains("V = s"), "{text}");
    }
}

#[test]
fn solve_fail_exits_1() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "knows enc(s,k); deduce s").unwrap();
    let out = intruder(&["solve", "--builtin", "dy", "--constraints", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ground_verdicts_and_oracle() {
    let mut sat = tempfile::NamedTempFile::new().unwrap();
    writeln!(sat, "knows enc(s,k), k; deduce s").unwrap();
    let sat = sat.path().to_str().unwrap().to_string();
    let mut unsat = tempfile::NamedTempFile::new().unwrap();
    writeln!(unsat, "knows enc(s,k); deduce s").unwrap();
    let unsat = unsat.path().to_str().unwrap().to_string();

    for (cmd, file, code) in [
        ("ground", &sat, 0),
        ("ground", &unsat, 1),
        ("oracle", &sat, 0),
        ("oracle", &unsat, 1),
    ] {
        let out = intruder(&[cmd, "--builtin", "dy", "--constraints", file]);
        assert_eq!(out.status.code(), Some(code), "{cmd} {file}");
    }
}

#[test]
fn input_errors_exit_above_2() {
    let out = intruder(&["ground", "--builtin", "dy", "--constraints", "missing.txt"]);
    assert_eq!(out.status.code(), Some(3));

    let out = intruder(&["saturate", "--builtin", "nope"]);
    assert_eq!(out.status.code(), Some(3));

    let out = intruder(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(3));

    let out = intruder(&["saturate"]);
    assert_eq!(out.status.code(), Some(3), "theory source is required");
}

#[test]
fn json_is_versioned_and_deterministic() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "knows enc(s,k), k; deduce V").unwrap();
    let path = f.path().to_str().unwrap();
    let args = ["solve", "--builtin", "dy", "--constraints", path, "--json"];
    let a = intruder(&args);
    let b = intruder(&args);
    assert_eq!(a.stdout, b.stdout, "JSON output must be byte-identical");
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(parsed["format_version"], 1);
    assert_eq!(parsed["outcome"], "sat");
}

#[test]
fn check_theory_reads_files() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(
        f,
        "theory toy\nsignature\n  a/0 free\n  h/1\nrules\ndeduction\n  X => h(X)\n"
    )
    .unwrap();
    let out = intruder(&["check-theory", "--theory", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("toy"));

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    write!(bad, "theory broken\nsignature\n  f/oops\n").unwrap();
    let out = intruder(&["check-theory", "--theory", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bound_env_var_overrides_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_intruder"))
        .args(["normalize", "--builtin", "dy", "a"])
        .env("INTRUDER_BOUND", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = Command::new(env!("CARGO_BIN_EXE_intruder"))
        .args(["normalize", "--builtin", "dy", "dec(enc(a,k),k)"])
        .env("INTRUDER_BOUND", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn saturate_json_reports_provenance() {
    let out = intruder(&["saturate", "--builtin", "dy", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rules = parsed["rules"].as_array().unwrap();
    assert_eq!(rules.len(), 14);
    // Step 1 rules carry no parents; every derived rule carries two.
    assert!(rules.iter().any(|r| r["parents"].is_null()));
    assert!(rules
        .iter()
        .any(|r| r["parents"].as_array().is_some_and(|p| p.len() == 2)));
}
