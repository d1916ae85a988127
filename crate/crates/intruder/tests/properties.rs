//! Property suites for the infrastructure: order laws, unification,
//! variant completeness, rewriting invariants, and format round-trips.
//! Every suite runs a deterministic seeded generator.

mod util;

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::Rng as _;

use intruder::order::{lpo_compare, OrderResult};
use intruder::rewrite::{normalize, RewriteRule, RewriteSystem, DEFAULT_STEP_BUDGET};
use intruder::rules::{DeductionRule, DeductionSystem, TheoryTag};
use intruder::term::{Signature, Substitution, SymbolKind, Term};
use intruder::theory::{
    builtin, parse_constraints, parse_theory, serialize_constraints, serialize_theory,
    TheoryBundle, BUILTIN_NAMES,
};
use intruder::unify::{match_term, match_terms, mgu_terms};
use intruder::variants::{variants, DEFAULT_DEPTH_BOUND};

fn runner(seed: u8, cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

/// A small fixed signature used by the order and unification suites.
fn small_sig() -> Signature {
    let mut sig = Signature::new();
    sig.declare("a", 0, SymbolKind::FreeConstant).unwrap();
    sig.declare("b", 0, SymbolKind::FreeConstant).unwrap();
    sig.declare("g", 1, SymbolKind::Constructor).unwrap();
    sig.declare("f", 2, SymbolKind::Constructor).unwrap();
    sig.declare("h", 3, SymbolKind::Constructor).unwrap();
    sig
}

fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::var("x")),
        Just(Term::var("y")),
        Just(Term::var("z")),
        Just(Term::constant("a")),
        Just(Term::constant("b")),
    ];
    leaf.prop_recursive(3, 48, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("g", vec![t])),
            (inner.clone(), inner.clone())
                .prop_map(|(s, t)| Term::app("f", vec![s, t])),
            (inner.clone(), inner.clone(), inner)
                .prop_map(|(s, t, u)| Term::app("h", vec![s, t, u])),
        ]
    })
}

fn grounding() -> Substitution {
    let mut sigma = Substitution::identity();
    for v in ["x", "y", "z"] {
        sigma.bind(v, Term::constant("a"));
    }
    sigma
}

#[test]
fn order_laws() {
    let sig = small_sig();
    let strat = (term_strategy(), term_strategy(), term_strategy());
    runner(0x01, 1000)
        .run(&strat, |(s, t, u)| {
            // Irreflexivity: a term is never greater than itself.
            prop_assert_eq!(lpo_compare(&s, &s, &sig).unwrap(), OrderResult::Equal);

            // Transitivity.
            if lpo_compare(&s, &t, &sig).unwrap() == OrderResult::Greater
                && lpo_compare(&t, &u, &sig).unwrap() == OrderResult::Greater
            {
                prop_assert_eq!(lpo_compare(&s, &u, &sig).unwrap(), OrderResult::Greater);
            }

            // Strict subterms are strictly smaller.
            for sub in s.subterms(true) {
                prop_assert_eq!(lpo_compare(&s, &sub, &sig).unwrap(), OrderResult::Greater);
            }

            // Ground totality: no incomparable pair of ground terms.
            let gr = grounding();
            let (sg, tg) = (s.apply(&gr), t.apply(&gr));
            prop_assert_ne!(
                lpo_compare(&sg, &tg, &sig).unwrap(),
                OrderResult::Incomparable
            );

            // Closure under substitution.
            let mut sigma = Substitution::identity();
            sigma.bind("x", Term::app("g", vec![Term::var("y")]));
            sigma.bind("y", Term::app("f", vec![Term::constant("a"), Term::var("z")]));
            if lpo_compare(&s, &t, &sig).unwrap() == OrderResult::Greater {
                prop_assert_eq!(
                    lpo_compare(&s.apply(&sigma), &t.apply(&sigma), &sig).unwrap(),
                    OrderResult::Greater
                );
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn mgu_is_most_general() {
    // τ maps the pattern variables into a disjoint variable pool, so τ
    // unifies t with tτ; the computed mgu must unify them too and τ must
    // factor through it.
    let strat = (term_strategy(), term_strategy(), term_strategy(), term_strategy());
    runner(0x02, 200)
        .run(&strat, |(t, i1, i2, i3)| {
            let rename = |u: &Term| {
                let mut r = Substitution::identity();
                for v in ["x", "y", "z"] {
                    r.bind(v, Term::var(&format!("{v}2")));
                }
                u.apply(&r)
            };
            let mut tau = Substitution::identity();
            tau.bind("x", rename(&i1));
            tau.bind("y", rename(&i2));
            tau.bind("z", rename(&i3));
            let instance = t.apply(&tau);

            let sigma = mgu_terms(&t, &instance).expect("τ is a unifier");
            prop_assert_eq!(t.apply(&sigma), instance.apply(&sigma));

            // Idempotence.
            for (_, img) in sigma.iter() {
                prop_assert_eq!(img.apply(&sigma), img.clone());
            }

            // Most generality: some ρ with σρ = τ on every variable.
            let vars: BTreeSet<String> = t.vars().union(&instance.vars()).cloned().collect();
            let pairs: Vec<(Term, Term)> = vars
                .iter()
                .map(|v| {
                    let v = Term::var(v);
                    (v.apply(&sigma), v.apply(&tau))
                })
                .collect();
            let borrowed: Vec<(&Term, &Term)> = pairs.iter().map(|(a, b)| (a, b)).collect();
            prop_assert!(
                match_terms(&borrowed).is_some(),
                "τ = {tau:?} does not factor through σ = {sigma:?}"
            );
            Ok(())
        })
        .unwrap();
}

#[test]
fn variant_completeness_factoring() {
    // For every ground instance tσ, some variant (θ, r) satisfies
    // ⌊tσ⌋ = rθ′ with σ equal to θθ′ modulo the theory.
    let bundle = builtin("dy").unwrap();
    let mut rng = util::rng(0x9a17);
    for i in 0..200 {
        let t = util::random_term(&mut rng, &bundle.sig, &["X", "Y"], 2);
        let mut sigma = Substitution::identity();
        for v in ["X", "Y"] {
            sigma.bind(v, util::random_ground_term(&mut rng, &bundle.sig, 2));
        }
        let nf = |u: &Term| normalize(u, &bundle.rewrites, DEFAULT_STEP_BUDGET).unwrap();
        let target = nf(&t.apply(&sigma));
        let vs = variants(&t, &bundle.rewrites, DEFAULT_DEPTH_BOUND).unwrap();
        let found = vs.iter().any(|v| {
            // One simultaneous match: θ′ must send the reduct to ⌊tσ⌋ and
            // every xθ to ⌊xσ⌋, including the variant's fresh variables.
            let mut pairs: Vec<(Term, Term)> = vec![(v.reduct.clone(), target.clone())];
            for x in t.vars() {
                let x = Term::var(&x);
                pairs.push((x.apply(&v.theta), nf(&x.apply(&sigma))));
            }
            let borrowed: Vec<(&Term, &Term)> = pairs.iter().map(|(a, b)| (a, b)).collect();
            match_terms(&borrowed).is_some()
        });
        assert!(
            found,
            "instance {i}: no variant of {t} factors {target} ({} variants)",
            vs.len()
        );
    }
}

#[test]
fn normal_forms_are_irreducible_and_stable() {
    let bundle = builtin("dy").unwrap();
    let mut rng = util::rng(0x4e4f);
    for _ in 0..200 {
        let t = util::random_term(&mut rng, &bundle.sig, &["X"], 3);
        let nf = normalize(&t, &bundle.rewrites, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(
            normalize(&nf, &bundle.rewrites, DEFAULT_STEP_BUDGET).unwrap(),
            nf
        );
        for sub in nf.subterms(false) {
            for rule in &bundle.rewrites.rules {
                assert!(
                    match_term(&rule.lhs, &sub).is_none(),
                    "normal form {nf} has a redex {sub}"
                );
            }
        }
    }
}

#[test]
fn builtin_theories_roundtrip() {
    for name in BUILTIN_NAMES {
        let b = builtin(name).unwrap();
        let reparsed = parse_theory(&serialize_theory(&b)).unwrap();
        assert_eq!(b, reparsed, "{name}");
    }
}

/// A random valid theory bundle: constructors and free constants, the
/// constructor deduction rules, and subterm-oriented rewrite rules.
fn random_bundle(rng: &mut rand_chacha::ChaCha8Rng, idx: usize) -> TheoryBundle {
    let mut sig = Signature::new();
    sig.declare("c", 0, SymbolKind::FreeConstant).unwrap();
    sig.declare("k", 0, SymbolKind::Constructor).unwrap();
    let n = rng.gen_range(2..=4);
    let mut constructors = vec!["k".to_string()];
    for j in 0..n {
        let name = format!("f{j}");
        sig.declare(&name, rng.gen_range(1..=3), SymbolKind::Constructor)
            .unwrap();
        constructors.push(name);
    }

    let mut l0 = Vec::new();
    for name in &constructors {
        if rng.gen_bool(0.8) {
            let arity = sig.symbols().find(|s| &s.name == name).unwrap().arity;
            let args: Vec<Term> = (1..=arity).map(|k| Term::var(&format!("X{k}"))).collect();
            l0.push(DeductionRule::new(args.clone(), Term::app(name, args)));
        }
    }

    // Rewrite rules: lhs over constructors, rhs a strict subterm; keep the
    // LPO-oriented ones.
    let mut rewrites = Vec::new();
    for _ in 0..6 {
        if rewrites.len() >= 2 {
            break;
        }
        let lhs = constructor_term(rng, &sig, 2);
        if lhs.is_var() || lhs.vars().is_empty() && rng.gen_bool(0.5) {
            continue;
        }
        let subs: Vec<Term> = lhs.subterms(true).into_iter().collect();
        let Some(rhs) = subs.choose(rng).cloned() else {
            continue;
        };
        let candidate = RewriteRule::new(lhs, rhs);
        let mut sys = RewriteSystem::new(
            rewrites
                .iter()
                .cloned()
                .chain([candidate.clone()])
                .collect(),
            sig.clone(),
        );
        if sys.check_oriented().is_ok() {
            rewrites.push(candidate);
        } else {
            sys.rules.pop();
        }
    }

    TheoryBundle {
        name: format!("random{idx}"),
        sig: sig.clone(),
        rewrites: RewriteSystem::new(rewrites, sig.clone()),
        l0: DeductionSystem::new(l0, sig, TheoryTag::ModuloTheory),
    }
}

fn constructor_term(rng: &mut rand_chacha::ChaCha8Rng, sig: &Signature, depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) {
            Term::var(["X", "Y", "Z"].choose(rng).unwrap())
        } else {
            Term::constant("k")
        };
    }
    let pool: Vec<_> = sig
        .symbols()
        .filter(|s| s.kind == SymbolKind::Constructor && s.arity > 0)
        .collect();
    let f = pool.choose(rng).unwrap();
    let args = (0..f.arity)
        .map(|_| constructor_term(rng, sig, depth - 1))
        .collect();
    Term::app(&f.name, args)
}

#[test]
fn random_theories_roundtrip() {
    let mut rng = util::rng(0x7e07);
    for i in 0..100 {
        let b = random_bundle(&mut rng, i);
        let text = serialize_theory(&b);
        let reparsed = parse_theory(&text).unwrap_or_else(|e| {
            panic!("bundle {i} failed to reparse: {e}\n{text}")
        });
        assert_eq!(b, reparsed, "bundle {i}:\n{text}");
    }
}

#[test]
fn constraint_systems_roundtrip() {
    let bundle = builtin("dy").unwrap();
    let mut rng = util::rng(0xc057);
    for i in 0..100 {
        // Well-formed by construction: monotone knowledge, goals originate
        // the variables used later.
        let n = rng.gen_range(1..=3);
        let mut knowledge: Vec<Term> = Vec::new();
        let mut vars: Vec<String> = Vec::new();
        let mut constraints = Vec::new();
        for j in 0..n {
            let avail: Vec<&str> = vars.iter().map(String::as_str).collect();
            knowledge.push(util::random_term(&mut rng, &bundle.sig, &avail, 2));
            let goal = if rng.gen_bool(0.5) {
                let v = format!("V{j}");
                vars.push(v.clone());
                Term::var(&v)
            } else {
                util::random_term(&mut rng, &bundle.sig, &avail, 2)
            };
            constraints.push(intruder::constraints::DeductionConstraint::new(
                knowledge.iter().cloned(),
                goal,
            ));
        }
        let mut eqs = Vec::new();
        if let Some(v) = vars.first() {
            if rng.gen_bool(0.4) {
                eqs.push((
                    Term::var(v),
                    util::random_term(&mut rng, &bundle.sig, &[], 1),
                ));
            }
        }
        let c = intruder::constraints::ConstraintSystem::new(
            constraints,
            intruder::unify::UnificationSystem::new(eqs),
        );
        let text = serialize_constraints(&c);
        let reparsed = parse_constraints(&text, &bundle)
            .unwrap_or_else(|e| panic!("system {i} failed to reparse: {e}\n{text}"));
        assert_eq!(c, reparsed, "system {i}:\n{text}");
    }
}
