//! Specialized decision procedure for subterm-convergent theories.
//!
//! When every rewrite rule's right-hand side is a strict subterm of its
//! left-hand side, saturation terminates with decomposition rules whose
//! conclusions are strict subterms of a premise.  Reachability then
//! decomposes: guess a bounded number of decreasing-rule applications to
//! extend the knowledge, after which the goal must be built by increasing
//! rules alone — tracked by `inc`-tagged constraints that are solved purely
//! by unification with the knowledge or top-symbol decomposition.  The
//! procedure needs no search budget.

use std::collections::BTreeSet;

use crate::constraints::{
    premise_assignments, verify_witness, witness_from_solved_form, ConstraintSystem,
    ConstraintTag, DeductionConstraint, SolveOutcome,
};
use crate::order::{classify, RuleClass};
use crate::rewrite::{check_subterm_convergent, RewriteSystem};
use crate::rules::{DeductionRule, DeductionSystem};
use crate::saturate::{saturate, SaturationConfig, SaturationError, SaturationOutcome};
use crate::term::{Substitution, Term};
use crate::unify::{mgu, mgu_terms, UnificationSystem};

/// Failures of the specialized saturation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubtermError {
    #[error("the rewrite system is not subterm convergent")]
    NotSubtermConvergent,
    #[error(
        "saturation produced rule `{0}` whose conclusion is not a strict \
         subterm of a premise — the theory violates the subterm saturation \
         guarantee"
    )]
    ShapeViolation(String),
    #[error("saturation diverged; offending rule `{0}`")]
    Diverged(String),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
}

/// Saturate over a subterm-convergent theory.  All rules with the
/// conclusion among the premises are deleted, and every derived rule is
/// checked to conclude a strict subterm of one of its premises.
pub fn saturate_subterm(
    l0: &DeductionSystem,
    r: &RewriteSystem,
) -> Result<DeductionSystem, SubtermError> {
    if !check_subterm_convergent(r) {
        return Err(SubtermError::NotSubtermConvergent);
    }
    let config = SaturationConfig::default();
    let mut sys = match saturate(l0, r, &config)? {
        SaturationOutcome::Saturated(l) => l,
        SaturationOutcome::Diverged { offending, .. } => {
            let culprit = offending
                .first()
                .map(DeductionRule::to_string)
                .unwrap_or_default();
            return Err(SubtermError::Diverged(culprit));
        }
    };
    // The §-policy is stricter than `delete_trivial`: any rule concluding
    // one of its premises is dropped, variable conclusions included.
    sys.rules.retain(|rule| !rule.is_trivial());
    for rule in &sys.rules {
        if rule.is_constructor_shape() || (rule.lhs.is_empty() && rule.rhs.is_ground()) {
            continue;
        }
        let ok = rule
            .lhs
            .iter()
            .any(|p| p.subterms(true).contains(&rule.rhs));
        if !ok {
            return Err(SubtermError::ShapeViolation(rule.to_string()));
        }
    }
    Ok(sys)
}

/// Counters for the bounded-guess invariant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubtermStats {
    /// Largest number of decreasing guesses used on any constraint, with
    /// the bound |Sub(E)∖Var(E)| that applied there.
    pub max_guesses: usize,
    pub guess_bound: usize,
}

/// Solve a prepared constraint system with the subterm procedure.  Total:
/// never returns `Unknown`.
pub fn solve_subterm(c: &ConstraintSystem, l: &DeductionSystem) -> SolveOutcome {
    solve_subterm_with_stats(c, l).0
}

pub fn solve_subterm_with_stats(
    c: &ConstraintSystem,
    l: &DeductionSystem,
) -> (SolveOutcome, SubtermStats) {
    let mut stats = SubtermStats::default();
    let original_vars = c.vars();
    match search(c, l, Substitution::identity(), &mut stats) {
        Some((acc, solved)) => {
            match witness_from_solved_form(&solved, &acc, &original_vars, l) {
                Some(w) if verify_witness(c, &w, l) => (SolveOutcome::Sat(w), stats),
                Some(_) | None => (
                    SolveOutcome::Unknown(
                        "solved form reached but witness verification failed".into(),
                    ),
                    stats,
                ),
            }
        }
        None => (SolveOutcome::Fail, stats),
    }
}

/// Depth-first search; returns the accumulated substitution and the solved
/// form on success.
fn search(
    c: &ConstraintSystem,
    l: &DeductionSystem,
    acc: Substitution,
    stats: &mut SubtermStats,
) -> Option<(Substitution, ConstraintSystem)> {
    let Some(pos) = c.constraints.iter().position(|dc| !dc.is_solved()) else {
        return Some((acc, c.clone()));
    };
    let dc = &c.constraints[pos];
    match dc.tag {
        ConstraintTag::Inc => solve_inc(c, pos, l, acc, stats),
        ConstraintTag::Plain => {
            // Guess the decreasing extension of E, then hand the constraint
            // to the increasing phase.
            let bound = guess_bound(&dc.knowledge);
            for (sigma, extension, used) in decreasing_extensions(&dc.knowledge, l, bound) {
                debug_assert!(used <= bound, "guess bound exceeded");
                let mut sys = c.apply(&sigma);
                let target = &mut sys.constraints[pos];
                target.knowledge.extend(extension.iter().cloned());
                target.tag = ConstraintTag::Inc;
                if used > stats.max_guesses {
                    stats.max_guesses = used;
                    stats.guess_bound = bound;
                }
                if let Some(hit) = search(&sys, l, acc.compose(&sigma), stats) {
                    return Some(hit);
                }
            }
            None
        }
    }
}

/// |Sub(E) ∖ Var(E)|: the bound on decreasing guesses.
fn guess_bound(e: &BTreeSet<Term>) -> usize {
    e.iter()
        .flat_map(|t| t.subterms(false))
        .filter(|t| !t.is_var())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Enumerate the decreasing-rule extensions of `e`: sequences of at most
/// `bound` applications, deduplicated by the resulting knowledge set, each
/// paired with the unifier it applied and the number of guesses used.
fn decreasing_extensions(
    e: &BTreeSet<Term>,
    l: &DeductionSystem,
    bound: usize,
) -> Vec<(Substitution, BTreeSet<Term>, usize)> {
    let mut out: Vec<(Substitution, BTreeSet<Term>, usize)> = Vec::new();
    let mut seen: BTreeSet<Vec<Term>> = BTreeSet::new();
    // Breadth-first over guess sequences.
    let mut frontier: Vec<(Substitution, BTreeSet<Term>, usize)> =
        vec![(Substitution::identity(), BTreeSet::new(), 0)];
    while let Some((sigma, extension, used)) = frontier.pop() {
        let know: BTreeSet<Term> = e
            .iter()
            .map(|t| t.apply(&sigma))
            .chain(extension.iter().cloned())
            .collect();
        let key: Vec<Term> = know.iter().cloned().collect();
        if !seen.insert(key) {
            continue;
        }
        out.push((sigma.clone(), extension.clone(), used));
        if used >= bound {
            continue;
        }
        let usable: Vec<&Term> = know.iter().filter(|t| !t.is_var()).collect();
        for rule in &l.rules {
            if classify(rule, &l.sig).ok() != Some(RuleClass::Decreasing) {
                continue;
            }
            let rule = rule.rename_apart();
            let premises: Vec<&Term> = rule.lhs.iter().collect();
            for assignment in premise_assignments(&premises, &usable) {
                let eqs: Vec<(Term, Term)> = premises
                    .iter()
                    .zip(&assignment)
                    .map(|(li, ei)| ((*li).clone(), (*ei).clone()))
                    .collect();
                let Ok(theta) = mgu(&UnificationSystem::new(eqs)) else {
                    continue;
                };
                let r_inst = rule.rhs.apply(&theta);
                if know.contains(&r_inst) {
                    continue;
                }
                let next_ext: BTreeSet<Term> = extension
                    .iter()
                    .map(|t| t.apply(&theta))
                    .chain([r_inst])
                    .collect();
                frontier.push((sigma.compose(&theta), next_ext, used + 1));
            }
        }
    }
    out
}

/// Solve the `inc`-tagged constraint at `pos`: unify the goal with a
/// knowledge member, or decompose it through its ℒ₀ constructor rule.
fn solve_inc(
    c: &ConstraintSystem,
    pos: usize,
    l: &DeductionSystem,
    acc: Substitution,
    stats: &mut SubtermStats,
) -> Option<(Substitution, ConstraintSystem)> {
    let dc = &c.constraints[pos];
    let goal = dc.goal.clone();
    // Unification with a non-variable knowledge member.
    for u in dc.usable_knowledge() {
        if let Ok(sigma) = mgu_terms(u, &goal) {
            let mut sys = c.clone();
            sys.constraints.remove(pos);
            if let Some(hit) = search(&sys.apply(&sigma), l, acc.compose(&sigma), stats) {
                return Some(hit);
            }
        }
    }
    // Decomposition through the constructor rule for the top symbol, when
    // one exists; increasing rules can produce nothing else.
    if let Term::App(f, args) = &goal {
        let constructible = l.rules.iter().any(|r| {
            r.is_constructor_shape() && matches!(&r.rhs, Term::App(g, _) if g == f)
        });
        let free_constant = l
            .rules
            .iter()
            .any(|r| r.lhs.is_empty() && r.rhs == goal);
        if free_constant {
            let mut sys = c.clone();
            sys.constraints.remove(pos);
            return search(&sys, l, acc, stats);
        }
        if constructible && !args.is_empty() {
            let mut sys = c.clone();
            sys.constraints.remove(pos);
            for (k, a) in args.iter().enumerate() {
                sys.constraints.insert(
                    pos + k,
                    DeductionConstraint {
                        knowledge: dc.knowledge.clone(),
                        goal: a.clone(),
                        tag: ConstraintTag::Inc,
                    },
                );
            }
            return search(&sys, l, acc, stats);
        }
    }
    None
}
