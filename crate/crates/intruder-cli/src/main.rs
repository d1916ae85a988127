//! Command-line front-end for the intruder deduction toolkit.
//!
//! Every subcommand reads a theory (`--theory FILE` or `--builtin NAME`)
//! and prints either a human-readable report or, with `--json`, a
//! versioned machine-readable one.  Exit codes: 0 for Sat/Val/true, 1 for
//! Fail/Inval/false, 2 for Unknown/Diverged, 3 for usage or input errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use intruder::constraints::{
    decide_ground, oracle_derivable, prepare_with_subst, solve_with_stats,
    ConstraintSystem, GroundConstraintSystem, GroundVerdict, SolveOutcome,
    DEFAULT_SOLVE_BUDGET, ORACLE_DEFAULT_DEPTH,
};
use intruder::contracting::is_contracting;
use intruder::order::classify;
use intruder::rewrite::{normalize, DEFAULT_STEP_BUDGET};
use intruder::rules::DeductionSystem;
use intruder::saturate::{saturate_traced, SaturationConfig, SaturationOutcome};
use intruder::subterm::{saturate_subterm, solve_subterm_with_stats};
use intruder::term::{Substitution, Term};
use intruder::theory::{
    builtin, parse_constraints, parse_term, parse_theory, serialize_constraints,
    serialize_deduction_rule, serialize_theory, TheoryBundle, BUILTIN_NAMES,
};
use intruder::variants::{variants, DEFAULT_DEPTH_BOUND};

const FORMAT_VERSION: u32 = 1;
const EXIT_OK: i32 = 0;
const EXIT_NEGATIVE: i32 = 1;
const EXIT_UNKNOWN: i32 = 2;
const EXIT_INPUT: i32 = 3;

/// Environment variable overriding the default `--bound` of every command.
const BOUND_ENV: &str = "INTRUDER_BOUND";

#[derive(Parser)]
#[command(
    name = "intruder",
    version,
    about = "Saturation-based intruder deduction modulo equational theories"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TheoryOpts {
    /// Theory file in the text format (see README).
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    theory: Option<PathBuf>,
    /// Built-in theory: dy, dsks, blind or twostack.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

#[derive(Args)]
struct CommonOpts {
    /// Main bound of the command (variant depth, rule cap, search budget or
    /// oracle depth, depending on the subcommand).
    #[arg(long, value_name = "N")]
    bound: Option<usize>,
    /// Replay bound for redundancy elimination during saturation; 0
    /// disables it.
    #[arg(long, value_name = "K")]
    redundancy_steps: Option<usize>,
    /// Emit a machine-readable JSON report.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalize a term with the theory's rewrite system.
    Normalize {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
        /// The term, e.g. 'dec(enc(a,k),k)'.
        term: String,
    },
    /// List the variants of a term (substitution and reduct pairs).
    Variants {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
        term: String,
    },
    /// Saturate the theory's deduction system.
    Saturate {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
        /// Keep rules whose conclusion occurs among their premises.
        #[arg(long)]
        keep_trivial: bool,
    },
    /// Classify the rules of the saturated system as increasing/decreasing.
    Classify {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check the contracting criterion on the saturated system.
    Contracting {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decide a ground reachability problem.
    Ground {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
        /// Constraint file; all terms must be ground.
        #[arg(long, value_name = "FILE")]
        constraints: PathBuf,
    },
    /// Solve a reachability constraint system.
    Solve {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_name = "FILE")]
        constraints: PathBuf,
        /// Use the dedicated subterm-convergent solver.
        #[arg(long)]
        subterm: bool,
    },
    /// Run the independent derivability oracle on ground constraints.
    Oracle {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, value_name = "FILE")]
        constraints: PathBuf,
    },
    /// Parse and validate a theory, reporting its contents.
    CheckTheory {
        #[command(flatten)]
        theory: TheoryOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    };
    std::process::exit(code);
}

fn load_theory(opts: &TheoryOpts) -> Result<TheoryBundle, String> {
    match (&opts.theory, &opts.builtin) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_theory(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        (None, Some(name)) => builtin(name).map_err(|e| e.to_string()),
        _ => Err(format!(
            "exactly one of --theory FILE or --builtin NAME is required (built-ins: {})",
            BUILTIN_NAMES.join(", ")
        )),
    }
}

/// Resolve the command's main bound: flag, then environment, then default.
fn bound_or(common: &CommonOpts, default: usize) -> Result<usize, String> {
    if let Some(b) = common.bound {
        return Ok(b);
    }
    match std::env::var(BOUND_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| format!("{BOUND_ENV}={v} is not a valid bound")),
        Err(_) => Ok(default),
    }
}

fn saturation_config(common: &CommonOpts, keep_trivial: bool) -> SaturationConfig {
    let mut cfg = SaturationConfig {
        delete_trivial: !keep_trivial,
        ..SaturationConfig::default()
    };
    if let Some(k) = common.redundancy_steps {
        cfg.redundancy_steps = k;
    }
    cfg
}

/// Saturate, mapping divergence to exit code 2.
fn saturated(
    bundle: &TheoryBundle,
    cfg: &SaturationConfig,
    json: bool,
) -> Result<Result<DeductionSystem, i32>, String> {
    match saturate_traced(&bundle.l0, &bundle.rewrites, cfg).map_err(|e| e.to_string())? {
        (SaturationOutcome::Saturated(l), _) => Ok(Ok(l)),
        (SaturationOutcome::Diverged { partial, offending }, _) => {
            report_divergence(&partial, &offending, json);
            Ok(Err(EXIT_UNKNOWN))
        }
    }
}

fn report_divergence(partial: &DeductionSystem, offending: &[intruder::rules::DeductionRule], json: bool) {
    if json {
        print_json(json!({
            "command": "saturate",
            "outcome": "diverged",
            "partial_rules": partial.rules.iter().map(|r| serialize_deduction_rule(r)).collect::<Vec<_>>(),
            "pending": offending.iter().map(|r| serialize_deduction_rule(r)).collect::<Vec<_>>(),
        }));
    } else {
        println!("diverged: {} rules admitted, {} pending", partial.rules.len(), offending.len());
        for r in offending.iter().take(5) {
            println!("  pending {}", serialize_deduction_rule(r));
        }
    }
}

fn print_json(mut value: serde_json::Value) {
    if let Some(obj) = value.as_object_mut() {
        obj.insert("format_version".into(), json!(FORMAT_VERSION));
    }
    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
}

fn witness_json(w: &Substitution) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = w
        .iter()
        .map(|(x, t)| (x.clone(), json!(t.to_string())))
        .collect();
    serde_json::Value::Object(map)
}

fn load_constraints(path: &PathBuf, bundle: &TheoryBundle) -> Result<ConstraintSystem, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_constraints(&text, bundle).map_err(|e| format!("{}: {e}", path.display()))
}

/// A ground problem from a constraint file: no variables, no equations,
/// terms normalized.
fn ground_problem(
    c: &ConstraintSystem,
    bundle: &TheoryBundle,
) -> Result<GroundConstraintSystem, String> {
    if !c.unif.equations.is_empty() {
        return Err("ground problems cannot carry equations".into());
    }
    let nf = |t: &Term| {
        normalize(t, &bundle.rewrites, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())
    };
    let mut out = Vec::new();
    for dc in &c.constraints {
        if dc.goal.is_var() || dc.knowledge.iter().any(|t| !t.is_ground()) || !dc.goal.is_ground() {
            return Err(format!("constraint `{dc}` is not ground"));
        }
        let knowledge: BTreeSet<Term> =
            dc.knowledge.iter().map(|t| nf(t)).collect::<Result<_, _>>()?;
        out.push((knowledge, nf(&dc.goal)?));
    }
    Ok(GroundConstraintSystem { constraints: out })
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.cmd {
        Cmd::Normalize { theory, common, term } => {
            let bundle = load_theory(&theory)?;
            let t = parse_term(&term, &bundle).map_err(|e| e.to_string())?;
            let budget = bound_or(&common, DEFAULT_STEP_BUDGET)?;
            let nf = normalize(&t, &bundle.rewrites, budget).map_err(|e| e.to_string())?;
            if common.json {
                print_json(json!({
                    "command": "normalize",
                    "input": t.to_string(),
                    "normal_form": nf.to_string(),
                }));
            } else {
                println!("{nf}");
            }
            Ok(EXIT_OK)
        }
        Cmd::Variants { theory, common, term } => {
            let bundle = load_theory(&theory)?;
            let t = parse_term(&term, &bundle).map_err(|e| e.to_string())?;
            let depth = bound_or(&common, DEFAULT_DEPTH_BOUND)?;
            let vs = match variants(&t, &bundle.rewrites, depth) {
                Ok(vs) => vs,
                Err(e) => {
                    eprintln!("{e}");
                    return Ok(EXIT_UNKNOWN);
                }
            };
            if common.json {
                let items: Vec<_> = vs
                    .iter()
                    .map(|v| {
                        json!({
                            "substitution": witness_json(&v.theta),
                            "reduct": v.reduct.to_string(),
                        })
                    })
                    .collect();
                print_json(json!({
                    "command": "variants",
                    "term": t.to_string(),
                    "variants": items,
                }));
            } else {
                for v in &vs {
                    let bindings: Vec<String> = v
                        .theta
                        .iter()
                        .map(|(x, u)| format!("{x} -> {u}"))
                        .collect();
                    println!("{{{}}} : {}", bindings.join(", "), v.reduct);
                }
            }
            Ok(EXIT_OK)
        }
        Cmd::Saturate { theory, common, keep_trivial } => {
            let bundle = load_theory(&theory)?;
            let cfg = {
                let mut cfg = saturation_config(&common, keep_trivial);
                if let Some(b) = common.bound {
                    cfg.max_rules = b;
                }
                cfg
            };
            match saturate_traced(&bundle.l0, &bundle.rewrites, &cfg).map_err(|e| e.to_string())? {
                (SaturationOutcome::Saturated(l), origins) => {
                    if common.json {
                        let rules: Vec<_> = origins
                            .iter()
                            .map(|o| {
                                json!({
                                    "rule": serialize_deduction_rule(&o.rule),
                                    "parents": o.parents.as_ref().map(|(a, b)| {
                                        vec![serialize_deduction_rule(a), serialize_deduction_rule(b)]
                                    }),
                                })
                            })
                            .collect();
                        print_json(json!({
                            "command": "saturate",
                            "outcome": "saturated",
                            "rules": rules,
                        }));
                    } else {
                        for rule in &l.rules {
                            println!("{}", serialize_deduction_rule(rule));
                        }
                    }
                    Ok(EXIT_OK)
                }
                (SaturationOutcome::Diverged { partial, offending }, _) => {
                    report_divergence(&partial, &offending, common.json);
                    Ok(EXIT_UNKNOWN)
                }
            }
        }
        Cmd::Classify { theory, common } => {
            let bundle = load_theory(&theory)?;
            let cfg = saturation_config(&common, false);
            let l = match saturated(&bundle, &cfg, common.json)? {
                Ok(l) => l,
                Err(code) => return Ok(code),
            };
            let mut rows = Vec::new();
            for rule in &l.rules {
                let class = classify(rule, &l.sig).map_err(|e| e.to_string())?;
                rows.push((serialize_deduction_rule(rule), format!("{class:?}").to_lowercase()));
            }
            if common.json {
                let items: Vec<_> = rows
                    .iter()
                    .map(|(r, c)| json!({"rule": r, "class": c}))
                    .collect();
                print_json(json!({"command": "classify", "rules": items}));
            } else {
                for (r, c) in &rows {
                    println!("{c:<10} {r}");
                }
            }
            Ok(EXIT_OK)
        }
        Cmd::Contracting { theory, common } => {
            let bundle = load_theory(&theory)?;
            let cfg = saturation_config(&common, false);
            let l = match saturated(&bundle, &cfg, common.json)? {
                Ok(l) => l,
                Err(code) => return Ok(code),
            };
            let report = is_contracting(&l).map_err(|e| e.to_string())?;
            if common.json {
                let rules: Vec<_> = report
                    .rules
                    .iter()
                    .map(|m| {
                        json!({
                            "rule": serialize_deduction_rule(&m.rule),
                            "measure": m.measure.to_string(),
                        })
                    })
                    .collect();
                print_json(json!({
                    "command": "contracting",
                    "contracting": report.contracting,
                    "rules": rules,
                }));
            } else {
                println!(
                    "{}",
                    if report.contracting { "contracting" } else { "not contracting" }
                );
                for m in report.counterexamples() {
                    println!("  measure {} for {}", m.measure, serialize_deduction_rule(&m.rule));
                }
            }
            Ok(if report.contracting { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Cmd::Ground { theory, common, constraints } => {
            let bundle = load_theory(&theory)?;
            let c = load_constraints(&constraints, &bundle)?;
            let g = ground_problem(&c, &bundle)?;
            let cfg = saturation_config(&common, false);
            let l = match saturated(&bundle, &cfg, common.json)? {
                Ok(l) => l,
                Err(code) => return Ok(code),
            };
            let verdict = decide_ground(&g, &l);
            if common.json {
                print_json(json!({
                    "command": "ground",
                    "verdict": format!("{verdict:?}").to_lowercase(),
                    "constraints": serialize_constraints(&c),
                }));
            } else {
                println!("{verdict:?}");
            }
            Ok(match verdict {
                GroundVerdict::Val => EXIT_OK,
                GroundVerdict::Inval => EXIT_NEGATIVE,
            })
        }
        Cmd::Solve { theory, common, constraints, subterm } => {
            let bundle = load_theory(&theory)?;
            let c0 = load_constraints(&constraints, &bundle)?;
            let budget = bound_or(&common, DEFAULT_SOLVE_BUDGET)?;
            let l = if subterm {
                match saturate_subterm(&bundle.l0, &bundle.rewrites) {
                    Ok(l) => l,
                    Err(e) => return Err(e.to_string()),
                }
            } else {
                let cfg = saturation_config(&common, false);
                match saturated(&bundle, &cfg, common.json)? {
                    Ok(l) => l,
                    Err(code) => return Ok(code),
                }
            };
            let branches = prepare_with_subst(&c0, &bundle.rewrites, DEFAULT_DEPTH_BOUND)
                .map_err(|e| e.to_string())?;
            let original_vars = c0.vars();
            let mut unknown: Option<String> = None;
            for (index, (applied, branch)) in branches.iter().enumerate() {
                let outcome = if subterm {
                    solve_subterm_with_stats(branch, &l).0
                } else {
                    solve_with_stats(branch, &l, budget).0
                };
                match outcome {
                    SolveOutcome::Sat(w) => {
                        let full = applied.compose(&w).restrict(&original_vars);
                        let witness = full.map_images(|t| {
                            normalize(t, &bundle.rewrites, DEFAULT_STEP_BUDGET)
                                .unwrap_or_else(|_| t.clone())
                        });
                        if common.json {
                            print_json(json!({
                                "command": "solve",
                                "outcome": "sat",
                                "witness": witness_json(&witness),
                                "branch": {
                                    "index": index,
                                    "system": serialize_constraints(branch),
                                },
                            }));
                        } else {
                            println!("Sat");
                            for (x, t) in witness.iter() {
                                println!("  {x} = {t}");
                            }
                        }
                        return Ok(EXIT_OK);
                    }
                    SolveOutcome::Fail => {}
                    SolveOutcome::Unknown(d) => unknown = Some(d),
                }
            }
            if let Some(diag) = unknown {
                if common.json {
                    print_json(json!({
                        "command": "solve",
                        "outcome": "unknown",
                        "diagnostic": diag,
                    }));
                } else {
                    println!("Unknown: {diag}");
                }
                Ok(EXIT_UNKNOWN)
            } else {
                if common.json {
                    print_json(json!({"command": "solve", "outcome": "fail"}));
                } else {
                    println!("Fail");
                }
                Ok(EXIT_NEGATIVE)
            }
        }
        Cmd::Oracle { theory, common, constraints } => {
            let bundle = load_theory(&theory)?;
            let c = load_constraints(&constraints, &bundle)?;
            let g = ground_problem(&c, &bundle)?;
            let depth = bound_or(&common, ORACLE_DEFAULT_DEPTH)?;
            let cfg = saturation_config(&common, false);
            let l = match saturated(&bundle, &cfg, common.json)? {
                Ok(l) => l,
                Err(code) => return Ok(code),
            };
            let mut results = Vec::new();
            let mut all = true;
            for (e, t) in &g.constraints {
                let derivable = oracle_derivable(e, t, &l, depth);
                all &= derivable;
                results.push((t.to_string(), derivable));
            }
            if common.json {
                let items: Vec<_> = results
                    .iter()
                    .map(|(t, d)| json!({"goal": t, "derivable": d}))
                    .collect();
                print_json(json!({
                    "command": "oracle",
                    "derivable": all,
                    "goals": items,
                }));
            } else {
                for (t, d) in &results {
                    println!("{} {t}", if *d { "derivable  " } else { "underivable" });
                }
            }
            Ok(if all { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Cmd::CheckTheory { theory, common } => {
            let bundle = load_theory(&theory)?;
            if common.json {
                print_json(json!({
                    "command": "check-theory",
                    "name": bundle.name,
                    "symbols": bundle.sig.symbols().count(),
                    "rewrite_rules": bundle.rewrites.rules.len(),
                    "deduction_rules": bundle.l0.rules.len(),
                    "canonical": serialize_theory(&bundle),
                }));
            } else {
                let mut s = String::new();
                let _ = writeln!(
                    s,
                    "{}: {} symbols, {} rewrite rules, {} deduction rules",
                    bundle.name,
                    bundle.sig.symbols().count(),
                    bundle.rewrites.rules.len(),
                    bundle.l0.rules.len()
                );
                print!("{s}");
            }
            Ok(EXIT_OK)
        }
    }
}
