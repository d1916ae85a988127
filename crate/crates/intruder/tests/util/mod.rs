//! Shared helpers for the integration suites: seeded random ground terms
//! and saturated built-in systems.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use intruder::rewrite::{normalize, RewriteSystem, DEFAULT_STEP_BUDGET};
use intruder::rules::DeductionSystem;
use intruder::saturate::{saturate, SaturationConfig, SaturationOutcome};
use intruder::term::{Signature, SymbolKind, Term};
use intruder::theory::{builtin, TheoryBundle};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Saturate a built-in theory with the configuration its golden test uses.
pub fn saturated_builtin(name: &str) -> (TheoryBundle, DeductionSystem) {
    let b = builtin(name).unwrap();
    let config = match name {
        // The dsks closure retains rules that are replay-redundant
        // w.r.t. each other; redundancy elimination must stay off.
        "dsks" => SaturationConfig {
            redundancy_steps: 0,
            ..SaturationConfig::default()
        },
        _ => SaturationConfig::default(),
    };
    match saturate(&b.l0, &b.rewrites, &config).unwrap() {
        SaturationOutcome::Saturated(l) => (b, l),
        SaturationOutcome::Diverged { .. } => panic!("{name} diverged"),
    }
}

/// A random ground term over the signature, of depth at most `depth`.
pub fn random_ground_term(rng: &mut ChaCha8Rng, sig: &Signature, depth: usize) -> Term {
    let constants: Vec<_> = sig.symbols().filter(|s| s.arity == 0).collect();
    let proper: Vec<_> = sig.symbols().filter(|s| s.arity > 0).collect();
    if depth == 0 || proper.is_empty() || rng.gen_bool(0.4) {
        let c = constants.choose(rng).expect("signature has a constant");
        Term::constant(&c.name)
    } else {
        let f = proper.choose(rng).unwrap();
        let args = (0..f.arity)
            .map(|_| random_ground_term(rng, sig, depth - 1))
            .collect();
        Term::app(&f.name, args)
    }
}

/// A random normal ground term.
pub fn random_normal_term(
    rng: &mut ChaCha8Rng,
    sig: &Signature,
    r: &RewriteSystem,
    depth: usize,
) -> Term {
    let t = random_ground_term(rng, sig, depth);
    normalize(&t, r, DEFAULT_STEP_BUDGET).expect("built-in theories terminate")
}

/// A random well-formed constraint system over the theory: monotone
/// knowledge, and every variable originates as the goal of an earlier
/// constraint.
pub fn random_constraint_system(
    rng: &mut ChaCha8Rng,
    bundle: &TheoryBundle,
    max_constraints: usize,
) -> intruder::constraints::ConstraintSystem {
    use intruder::constraints::DeductionConstraint;
    use intruder::unify::UnificationSystem;

    let n = rng.gen_range(1..=max_constraints);
    let mut knowledge: Vec<Term> = Vec::new();
    let mut goal_vars: Vec<String> = Vec::new();
    let mut constraints = Vec::new();
    for i in 0..n {
        let fresh: Vec<&str> = goal_vars.iter().map(String::as_str).collect();
        for _ in 0..rng.gen_range(1..=2) {
            knowledge.push(random_term(rng, &bundle.sig, &fresh, 2));
        }
        let goal = if rng.gen_bool(0.6) {
            let v = format!("v{i}");
            goal_vars.push(v.clone());
            Term::var(&v)
        } else {
            random_term(rng, &bundle.sig, &fresh, 2)
        };
        constraints.push(DeductionConstraint::new(knowledge.iter().cloned(), goal));
    }
    // Occasionally pin an originated variable to a concrete term.
    let mut eqs = Vec::new();
    if !goal_vars.is_empty() && rng.gen_bool(0.3) {
        let v = goal_vars.choose(rng).unwrap();
        let t = random_term(rng, &bundle.sig, &[], 2);
        eqs.push((Term::var(v), t));
    }
    intruder::constraints::ConstraintSystem::new(constraints, UnificationSystem::new(eqs))
}

/// A random term with variables drawn from `vars`, depth at most `depth`.
pub fn random_term(
    rng: &mut ChaCha8Rng,
    sig: &Signature,
    vars: &[&str],
    depth: usize,
) -> Term {
    if !vars.is_empty() && rng.gen_bool(0.3) {
        return Term::var(vars.choose(rng).unwrap());
    }
    let pool: Vec<_> = sig
        .symbols()
        .filter(|s| s.arity == 0 || depth > 0)
        .collect();
    let f = pool.choose(rng).expect("non-empty signature");
    if f.kind == SymbolKind::FreeConstant || f.arity == 0 {
        Term::constant(&f.name)
    } else {
        let args = (0..f.arity)
            .map(|_| random_term(rng, sig, vars, depth - 1))
            .collect();
        Term::app(&f.name, args)
    }
}
