//! The δ/μ measures and the contracting criterion.
//!
//! Solving against a saturated system terminates when every rule keeps
//! strictly "contracting" the variable count of a constraint system.  The
//! measures work over the decomposition system 𝒰, which projects any
//! application onto each of its arguments; `delta` counts non-variable
//! terms against the fresh variables they expose, `mu` takes the worst case
//! over subterm unifications and decompositions, and `is_contracting`
//! demands a strictly positive measure for every rule of the system.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::order::{classify, RuleClass};
use crate::rules::{DeductionRule, DeductionSystem};
use crate::term::{vars_of, Signature, SignatureError, Substitution, Term};
use crate::unify::mgu_terms;

/// An integer measure with an explicit +∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    Finite(i64),
    Infinite,
}

impl Measure {
    pub fn is_positive(self) -> bool {
        match self {
            Measure::Finite(n) => n > 0,
            Measure::Infinite => true,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Finite(n) => write!(f, "{n}"),
            Measure::Infinite => write!(f, "+inf"),
        }
    }
}

/// δ(T): +∞ when T is all variables, otherwise the number of non-variable
/// members minus the number of their variables not already exposed in T.
pub fn delta(t: &BTreeSet<Term>) -> Measure {
    let nonvar: Vec<&Term> = t.iter().filter(|u| !u.is_var()).collect();
    if nonvar.is_empty() {
        return Measure::Infinite;
    }
    let exposed: BTreeSet<&String> = t
        .iter()
        .filter_map(|u| match u {
            Term::Var(x) => Some(x),
            Term::App(..) => None,
        })
        .collect();
    let hidden = vars_of(nonvar.iter().copied())
        .iter()
        .filter(|x| !exposed.contains(x))
        .count();
    Measure::Finite(nonvar.len() as i64 - hidden as i64)
}

/// All T′ with T →*_𝒰 T′: a step replaces a non-variable member by one of
/// its arguments.  Includes T itself.
pub fn decompositions(t: &BTreeSet<Term>) -> BTreeSet<BTreeSet<Term>> {
    let mut out: BTreeSet<BTreeSet<Term>> = BTreeSet::new();
    let mut stack = vec![t.clone()];
    while let Some(cur) = stack.pop() {
        if !out.insert(cur.clone()) {
            continue;
        }
        for u in &cur {
            if let Term::App(_, args) = u {
                if args.is_empty() {
                    // 𝒰 has no rule for constants.
                    continue;
                }
                // One 𝒰 step: the member is replaced by all its arguments.
                let mut next = cur.clone();
                next.remove(u);
                next.extend(args.iter().cloned());
                stack.push(next);
            }
        }
    }
    out
}

/// Δ(T): the strict maximal subterms — the union of the argument sets of
/// the non-variable members.
pub fn maximal_strict_subterms(t: &BTreeSet<Term>) -> BTreeSet<Term> {
    t.iter()
        .filter_map(|u| match u {
            Term::App(_, args) => Some(args.iter().cloned()),
            Term::Var(_) => None,
        })
        .flatten()
        .collect()
}

/// The σ candidates of the μ definition: the identity and the mgus of
/// distinct unifiable subterms of T, closed under composition.
fn subterm_unifier_closure(t: &BTreeSet<Term>) -> Vec<Substitution> {
    // Cap on the closure size; each productive composition eliminates a
    // variable, so the closure is small for the term sets that arise here.
    const CAP: usize = 512;
    let mut out: Vec<Substitution> = vec![Substitution::identity()];
    let mut images: BTreeSet<Vec<Term>> = BTreeSet::new();
    let base: Vec<Term> = t.iter().cloned().collect();
    images.insert(base.clone());
    let mut frontier = vec![Substitution::identity()];
    while let Some(sigma) = frontier.pop() {
        if out.len() >= CAP {
            break;
        }
        let inst: BTreeSet<Term> = t.iter().map(|u| u.apply(&sigma)).collect();
        let subs: Vec<Term> = inst
            .iter()
            .flat_map(|u| u.subterms(false))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        for (i, u) in subs.iter().enumerate() {
            for v in subs.iter().skip(i + 1) {
                let Ok(theta) = mgu_terms(u, v) else {
                    continue;
                };
                if theta.is_identity() {
                    continue;
                }
                let composed = sigma.compose(&theta);
                let key: Vec<Term> = base.iter().map(|w| w.apply(&composed)).collect();
                if images.insert(key) {
                    out.push(composed.clone());
                    frontier.push(composed);
                }
            }
        }
    }
    out
}

/// μ(T): minimum of δ over all decompositions of all subterm-unified
/// instances of T.
pub fn mu(t: &BTreeSet<Term>) -> Measure {
    let mut best = Measure::Infinite;
    for sigma in subterm_unifier_closure(t) {
        let inst: BTreeSet<Term> = t.iter().map(|u| u.apply(&sigma)).collect();
        for tp in decompositions(&inst) {
            best = best.min(delta(&tp));
        }
    }
    best
}

/// The Remark's alternative μ: no σ quantification, decompositions of T
/// itself only.
pub fn mu_general(t: &BTreeSet<Term>) -> Measure {
    decompositions(t)
        .iter()
        .map(delta)
        .min()
        .unwrap_or(Measure::Infinite)
}

/// μ of a rule: increasing rules measure Δ(l∖𝒳 ∪ {r}), decreasing rules
/// Δ(l∖𝒳).
pub fn mu_rule(rule: &DeductionRule, sig: &Signature) -> Result<Measure, SignatureError> {
    let mut base: BTreeSet<Term> = rule.nonvar_premises().cloned().collect();
    if classify(rule, sig)? == RuleClass::Increasing {
        base.insert(rule.rhs.clone());
    }
    Ok(mu(&maximal_strict_subterms(&base)))
}

/// Per-rule outcome of the contracting check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMeasure {
    pub rule: DeductionRule,
    pub measure: Measure,
}

/// Report of [`is_contracting`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractingReport {
    pub contracting: bool,
    pub rules: Vec<RuleMeasure>,
}

impl ContractingReport {
    /// The rules whose measure is not strictly positive.
    pub fn counterexamples(&self) -> impl Iterator<Item = &RuleMeasure> {
        self.rules.iter().filter(|m| !m.measure.is_positive())
    }
}

/// Check the contracting criterion: every rule of the saturated system must
/// have a strictly positive measure.
pub fn is_contracting(l: &DeductionSystem) -> Result<ContractingReport, SignatureError> {
    let mut rules = Vec::with_capacity(l.rules.len());
    for rule in &l.rules {
        rules.push(RuleMeasure {
            rule: rule.clone(),
            measure: mu_rule(rule, &l.sig)?,
        });
    }
    Ok(ContractingReport {
        contracting: rules.iter().all(|m| m.measure.is_positive()),
        rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ts: &[Term]) -> BTreeSet<Term> {
        ts.iter().cloned().collect()
    }

    #[test]
    fn delta_examples() {
        let (x, y) = (Term::var("x"), Term::var("y"));
        let fxy = Term::app("f", vec![x.clone(), y.clone()]);
        assert_eq!(delta(&set(&[x.clone(), y.clone()])), Measure::Infinite);
        assert_eq!(delta(&set(&[fxy.clone()])), Measure::Finite(-1));
        assert_eq!(
            delta(&set(&[fxy, x.clone(), y.clone()])),
            Measure::Finite(1)
        );
        assert_eq!(delta(&BTreeSet::new()), Measure::Infinite);
    }

    #[test]
    fn decomposition_examples() {
        let x = Term::var("x");
        assert_eq!(
            decompositions(&set(&[x.clone()])),
            BTreeSet::from([set(&[x.clone()])])
        );
        let fax = Term::app("f", vec![Term::constant("a"), x.clone()]);
        assert_eq!(
            decompositions(&set(&[fax.clone()])),
            BTreeSet::from([
                set(&[fax.clone()]),
                set(&[Term::constant("a"), x.clone()])
            ])
        );
        let fxy = Term::app("f", vec![x.clone(), Term::var("y")]);
        let g = Term::app("g", vec![fxy.clone()]);
        assert_eq!(
            decompositions(&set(&[g.clone()])),
            BTreeSet::from([
                set(&[g]),
                set(&[fxy]),
                set(&[x, Term::var("y")])
            ])
        );
    }

    #[test]
    fn mu_examples() {
        let (x, y, z) = (Term::var("x"), Term::var("y"), Term::var("z"));
        assert_eq!(mu(&set(&[x.clone(), y.clone()])), Measure::Infinite);
        // {Bl(x,y), SK(z)}: two non-variables over three hidden variables.
        let t = set(&[
            Term::app("bl", vec![x.clone(), y.clone()]),
            Term::app("sk", vec![z.clone()]),
        ]);
        assert_eq!(mu(&t), Measure::Finite(-1));
        // {PK(y), SK(y)}: 2 − 1 undecomposed, 1 − 0 after one projection;
        // the fully decomposed all-variable branch is +∞ and cannot lower
        // the minimum.  Positive either way.
        let t = set(&[
            Term::app("pk", vec![y.clone()]),
            Term::app("sk", vec![y.clone()]),
        ]);
        assert_eq!(mu(&t), Measure::Finite(1));
        assert!(mu(&t).is_positive());
    }

    #[test]
    fn mu_is_bounded_by_mu_general() {
        let (x, y) = (Term::var("x"), Term::var("y"));
        let sets = [
            set(&[Term::app("f", vec![x.clone(), y.clone()])]),
            set(&[Term::app("f", vec![x.clone(), x.clone()]), y.clone()]),
            set(&[Term::app("g", vec![Term::app("f", vec![x.clone(), y.clone()])])]),
        ];
        for t in &sets {
            assert!(mu(t) <= mu_general(t), "{t:?}");
        }
    }

    #[test]
    fn remark_counterexample() {
        // μ_general is positive on T but drops to 0 on Tσ with σ = {x↦y}.
        let (x, y) = (Term::var("x"), Term::var("y"));
        let f = |a: &Term, b: &Term| Term::app("f", vec![a.clone(), b.clone()]);
        let t = set(&[f(&x, &x), f(&x, &y), f(&y, &x)]);
        let mg = mu_general(&t);
        assert_eq!(mg, Measure::Finite(1));
        assert!(mg.is_positive());
        let sigma = Substitution::singleton("x", y.clone());
        let t_sigma: BTreeSet<Term> = t.iter().map(|u| u.apply(&sigma)).collect();
        assert_eq!(mu_general(&t_sigma), Measure::Finite(0));
    }

    #[test]
    fn mu_general_trivial_examples() {
        let x = Term::var("x");
        assert_eq!(mu_general(&set(&[x])), Measure::Infinite);
        let fab = Term::app("f", vec![Term::constant("a"), Term::constant("b")]);
        assert_eq!(mu_general(&set(&[fab])), Measure::Finite(1));
    }
}
