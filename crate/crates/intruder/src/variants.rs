//! Finite variants by basic narrowing.
//!
//! A variant of `t` is a pair `(θ, ⌊tθ⌋)`; the finite variant property says
//! finitely many such pairs cover all normal instances of `t`.  Basic
//! narrowing — narrowing restricted to positions that do not come from
//! previously substituted parts — enumerates a covering set and terminates
//! on the theories shipped here; a configurable depth bound turns divergence
//! on other inputs into a diagnosable error.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rewrite::{
    at_position, normalize, positions, replace_at, RewriteError, RewriteSystem,
    DEFAULT_STEP_BUDGET,
};
use crate::term::{canonical_renaming, Substitution, Term};
use crate::unify::{match_terms, mgu_terms};

/// A variant substitution together with the normalized instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variant {
    pub theta: Substitution,
    pub reduct: Term,
}

/// Default bound on the depth of the basic narrowing tree.
pub const DEFAULT_DEPTH_BOUND: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VariantError {
    #[error(
        "basic narrowing from {term} still has open branches at depth {depth}: \
         the theory appears to lack the finite variant property"
    )]
    DepthExhausted { term: Term, depth: usize },
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

struct Node {
    term: Term,
    theta: Substitution,
    /// Positions of `term` still open to narrowing (the non-substitution
    /// part).
    basic: BTreeSet<Vec<usize>>,
    depth: usize,
}

/// Compute the variants of `t`.
pub fn variants(
    t: &Term,
    r: &RewriteSystem,
    depth_bound: usize,
) -> Result<Vec<Variant>, VariantError> {
    let tvars = t.vars();
    let mut out: Vec<Variant> = Vec::new();
    let mut seen: BTreeSet<Vec<Term>> = BTreeSet::new();
    let root = Node {
        term: t.clone(),
        theta: Substitution::identity(),
        basic: positions(t)
            .into_iter()
            .filter(|p| !at_position(t, p).is_var())
            .collect(),
        depth: 0,
    };
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        // Deduplicate search states modulo renaming; the state is the node
        // term together with the images of the original variables.
        let key = state_key(&node.term, &node.theta, &tvars);
        if !seen.insert(key) {
            continue;
        }
        out.push(Variant {
            theta: node.theta.restrict(&tvars),
            reduct: normalize(&t.apply(&node.theta), r, DEFAULT_STEP_BUDGET)?,
        });
        for p in &node.basic {
            let sub = at_position(&node.term, p);
            if sub.is_var() {
                // A previously non-variable position cannot become a
                // variable, but a position of the rule rhs skeleton can be
                // one from the start; skip it.
                continue;
            }
            for rule in &r.rules {
                let rule = rule.rename_apart();
                let Ok(sigma) = mgu_terms(sub, &rule.lhs) else {
                    continue;
                };
                if node.depth + 1 > depth_bound {
                    return Err(VariantError::DepthExhausted {
                        term: t.clone(),
                        depth: depth_bound,
                    });
                }
                let new_term = replace_at(&node.term, p, &rule.rhs).apply(&sigma);
                // Basic positions: keep those not under p, add the
                // non-variable skeleton of the rule rhs below p.
                let mut basic: BTreeSet<Vec<usize>> = node
                    .basic
                    .iter()
                    .filter(|q| !q.starts_with(p))
                    .cloned()
                    .collect();
                for q in positions(&rule.rhs) {
                    if !at_position(&rule.rhs, &q).is_var() {
                        let mut pq = p.clone();
                        pq.extend(q);
                        basic.insert(pq);
                    }
                }
                stack.push(Node {
                    term: new_term,
                    theta: node.theta.compose(&sigma),
                    basic,
                    depth: node.depth + 1,
                });
            }
        }
    }
    Ok(prune_subsumed(out, &tvars))
}

fn state_key(term: &Term, theta: &Substitution, tvars: &BTreeSet<String>) -> Vec<Term> {
    let mut tuple: Vec<Term> = vec![term.clone()];
    for x in tvars {
        tuple.push(Term::Var(x.clone()).apply(theta));
    }
    let ren = canonical_renaming(tuple.iter());
    tuple.iter().map(|u| u.apply(&ren)).collect()
}

/// Drop variants subsumed by a more general one.  `(θ′,u′)` subsumes
/// `(θ,u)` when a single matcher ρ sends `u′` to `u` and every `xθ′` to
/// `xθ`.
fn prune_subsumed(mut vs: Vec<Variant>, tvars: &BTreeSet<String>) -> Vec<Variant> {
    vs.sort();
    vs.dedup();
    let subsumes = |a: &Variant, b: &Variant| -> bool {
        let mut pairs: Vec<(&Term, &Term)> = vec![(&a.reduct, &b.reduct)];
        let imgs_a: Vec<Term> = tvars
            .iter()
            .map(|x| Term::Var(x.clone()).apply(&a.theta))
            .collect();
        let imgs_b: Vec<Term> = tvars
            .iter()
            .map(|x| Term::Var(x.clone()).apply(&b.theta))
            .collect();
        pairs.extend(imgs_a.iter().zip(imgs_b.iter()));
        match_terms(&pairs).is_some()
    };
    let mut keep: Vec<Variant> = Vec::new();
    'outer: for (i, v) in vs.iter().enumerate() {
        for (j, w) in vs.iter().enumerate() {
            if i == j {
                continue;
            }
            if subsumes(w, v) {
                // Mutual subsumption means renaming-equivalent; keep the
                // first occurrence only.
                if subsumes(v, w) && i < j {
                    continue;
                }
                continue 'outer;
            }
        }
        keep.push(v.clone());
    }
    keep
}

/// Internal symbol used to narrow a tuple of terms simultaneously.  The `#`
/// makes it unparseable, so it can never collide with a declared symbol.
pub const TUPLE_SYMBOL: &str = "#tuple";

/// Variants of a term list, computed through a fresh tupling symbol so that
/// shared variables are instantiated consistently.
pub fn variants_tuple(
    ts: &[Term],
    r: &RewriteSystem,
    depth_bound: usize,
) -> Result<Vec<(Substitution, Vec<Term>)>, VariantError> {
    let tuple = Term::app(TUPLE_SYMBOL, ts.to_vec());
    let vs = variants(&tuple, r, depth_bound)?;
    Ok(vs
        .into_iter()
        .map(|v| match v.reduct {
            Term::App(ref f, ref args) if f == TUPLE_SYMBOL => (v.theta, args.clone()),
            other => unreachable!("tuple root is never rewritten: {other}"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::RewriteRule;
    use crate::term::{Signature, SymbolKind};

    fn dy_r() -> RewriteSystem {
        let mut sig = Signature::new();
        sig.declare("a", 0, SymbolKind::FreeConstant).unwrap();
        sig.declare("fst", 1, SymbolKind::Constructor).unwrap();
        sig.declare("snd", 1, SymbolKind::Constructor).unwrap();
        sig.declare("pair", 2, SymbolKind::Constructor).unwrap();
        let x = Term::var("x");
        let y = Term::var("y");
        RewriteSystem::new(
            vec![
                RewriteRule::new(
                    Term::app("fst", vec![Term::app("pair", vec![x.clone(), y.clone()])]),
                    x.clone(),
                ),
                RewriteRule::new(
                    Term::app("snd", vec![Term::app("pair", vec![x.clone(), y.clone()])]),
                    y.clone(),
                ),
            ],
            sig,
        )
    }

    #[test]
    fn constant_has_identity_variant_only() {
        let r = dy_r();
        let vs = variants(&Term::constant("a"), &r, 10).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(vs[0].theta.is_identity());
        assert_eq!(vs[0].reduct, Term::constant("a"));
    }

    #[test]
    fn projection_has_two_variants() {
        let r = dy_r();
        let t = Term::app("fst", vec![Term::var("x")]);
        let vs = variants(&t, &r, 10).unwrap();
        assert_eq!(vs.len(), 2, "{vs:?}");
        assert!(vs.iter().any(|v| v.theta.is_identity() && v.reduct == t));
        // The other variant instantiates x to a pair and projects.
        let narrow = vs.iter().find(|v| !v.theta.is_identity()).unwrap();
        let img = Term::var("x").apply(&narrow.theta);
        assert!(matches!(&img, Term::App(f, _) if f == "pair"));
        assert!(narrow.reduct.is_var());
    }

    #[test]
    fn variant_reducts_are_normal_instances() {
        let r = dy_r();
        let t = Term::app("fst", vec![Term::app("snd", vec![Term::var("x")])]);
        for v in variants(&t, &r, 10).unwrap() {
            let expect = normalize(&t.apply(&v.theta), &r, 1000).unwrap();
            assert_eq!(v.reduct, expect);
        }
    }

    #[test]
    fn tuple_variants_share_instantiation() {
        let r = dy_r();
        let ts = vec![Term::app("fst", vec![Term::var("x")]), Term::var("x")];
        let vs = variants_tuple(&ts, &r, 10).unwrap();
        // The narrowing branch must instantiate x in both components.
        assert!(vs.iter().any(|(theta, reducts)| {
            !theta.is_identity()
                && reducts[0].is_var()
                && matches!(&reducts[1], Term::App(f, _) if f == "pair")
        }));
    }

    #[test]
    fn empty_tuple() {
        let r = dy_r();
        let vs = variants_tuple(&[], &r, 10).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(vs[0].0.is_identity());
        assert!(vs[0].1.is_empty());
    }

    #[test]
    fn depth_bound_reports_fvp_violation() {
        // h(f(x)) -> f(h(x)) terminates as a rewrite system (h moves
        // inward) but basic narrowing from h(y) never closes: each step
        // re-exposes an h-redex in the rhs skeleton.
        let mut sig = Signature::new();
        sig.declare("f", 1, SymbolKind::Constructor).unwrap();
        sig.declare("h", 1, SymbolKind::Constructor).unwrap();
        let r = RewriteSystem::new(
            vec![RewriteRule::new(
                Term::app("h", vec![Term::app("f", vec![Term::var("x")])]),
                Term::app("f", vec![Term::app("h", vec![Term::var("x")])]),
            )],
            sig,
        );
        let t = Term::app("h", vec![Term::var("z")]);
        assert!(matches!(
            variants(&t, &r, 5),
            Err(VariantError::DepthExhausted { .. })
        ));
    }
}
