//! Saturation of a deduction system.
//!
//! Step 1 lifts the constructor rules of ℒ₀ through the finite variants of
//! their conclusions, anticipating every way the rewrite theory can fire on
//! a freshly built term; the result is read in the empty theory.  Step 2
//! repeatedly applies the closure rule: an increasing rule is composed into
//! a non-variable premise of another rule via unification.  New rules are
//! simplified, trivial rules (conclusion among the premises) are dropped,
//! and a bounded replay check deletes redundant rules at creation time —
//! which is what makes saturation of the blind-signature theory terminate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::order::{classify, RuleClass};
use crate::rewrite::{normalize, RewriteSystem, DEFAULT_STEP_BUDGET};
use crate::rules::{DeductionRule, DeductionSystem, TheoryTag};
use crate::term::{fresh_var, vars_of, Substitution, Term};
use crate::unify::{match_term, mgu_terms};
use crate::variants::{variants, VariantError, DEFAULT_DEPTH_BOUND};

/// Bounds and switches for the saturation loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaturationConfig {
    /// Abort once the system holds this many rules.
    pub max_rules: usize,
    /// Abort after this many closure rounds.
    pub max_rounds: usize,
    /// Drop rules whose conclusion is one of their premises.
    pub delete_trivial: bool,
    /// Replay bound for the redundancy check; 0 disables it.
    pub redundancy_steps: usize,
    /// Depth bound for variant computation in Step 1.
    pub variant_depth: usize,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        SaturationConfig {
            max_rules: 256,
            max_rounds: 32,
            delete_trivial: true,
            redundancy_steps: 2,
            variant_depth: DEFAULT_DEPTH_BOUND,
        }
    }
}

/// Result of running saturation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaturationOutcome {
    Saturated(DeductionSystem),
    /// Bounds were hit; carries the partial system and the rules that were
    /// still being generated when the run stopped.
    Diverged {
        partial: DeductionSystem,
        offending: Vec<DeductionRule>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SaturationError {
    #[error("rule {0} does not have the constructor shape x1,…,xn => f(x1,…,xn)")]
    BadInitialRule(String),
    #[error(transparent)]
    Variant(#[from] VariantError),
    #[error(transparent)]
    Signature(#[from] crate::term::SignatureError),
}

/// Step 1: lift every initial rule through the variants of its conclusion.
/// The output is read in the empty theory and contains the initial rules
/// themselves (identity variants).
pub fn step1(
    l0: &DeductionSystem,
    r: &RewriteSystem,
    variant_depth: usize,
) -> Result<DeductionSystem, SaturationError> {
    let mut out = DeductionSystem::new(Vec::new(), l0.sig.clone(), TheoryTag::EmptyTheory);
    for rule in &l0.rules {
        if !rule.is_constructor_shape() && !(rule.lhs.is_empty() && rule.rhs.is_ground()) {
            return Err(SaturationError::BadInitialRule(rule.to_string()));
        }
        for v in variants(&rule.rhs, r, variant_depth)? {
            let lifted = DeductionRule::new(
                rule.lhs.iter().map(|x| x.apply(&v.theta)),
                v.reduct.clone(),
            );
            out.insert_rule(simplify(&lifted));
        }
    }
    Ok(out)
}

/// Remove variable premises that occur neither in the non-variable premises
/// nor in the conclusion.
pub fn simplify(rule: &DeductionRule) -> DeductionRule {
    let keep = vars_of(rule.nonvar_premises().chain([&rule.rhs]));
    DeductionRule::new(
        rule.lhs
            .iter()
            .filter(|t| match t {
                Term::Var(x) => keep.contains(x),
                _ => true,
            })
            .cloned(),
        rule.rhs.clone(),
    )
}

/// One closure inference: compose the increasing rule `inc` into the
/// non-variable premise `s` of `other`.  Both rules must already be renamed
/// apart.
fn close_pair(inc: &DeductionRule, other: &DeductionRule, s: &Term) -> Option<DeductionRule> {
    let sigma = mgu_terms(&inc.rhs, s).ok()?;
    let lhs: BTreeSet<Term> = inc
        .lhs
        .iter()
        .chain(other.lhs.iter().filter(|t| *t != s))
        .map(|t| t.apply(&sigma))
        .collect();
    Some(DeductionRule::new(lhs, other.rhs.apply(&sigma)))
}

/// Should `delete_trivial` drop this rule?  A rule is useless when its
/// conclusion is a non-variable premise (plain membership already covers
/// it), or when it collapses to the identity axiom `x ↠ x`.  A variable
/// conclusion alongside other premises (such as `x,PK(y),SK(y) ↠ x`) is
/// kept: such rules appear in the saturated systems as printed.
pub fn deletable_trivial(rule: &DeductionRule) -> bool {
    if rule.rhs.is_var() {
        rule.lhs.len() == 1 && rule.lhs.contains(&rule.rhs)
    } else {
        rule.lhs.contains(&rule.rhs)
    }
}

/// All rules the closure rule can add to `l` in one pass.  Children are
/// simplified; duplicates (modulo renaming) are dropped.
pub fn closure_step(l: &DeductionSystem) -> Vec<DeductionRule> {
    closure_step_traced(l).into_iter().map(|(c, _)| c).collect()
}

/// [`closure_step`], additionally reporting the parent pair (increasing
/// rule, host rule) of every child.
pub fn closure_step_traced(
    l: &DeductionSystem,
) -> Vec<(DeductionRule, (DeductionRule, DeductionRule))> {
    let existing: BTreeSet<DeductionRule> =
        l.rules.iter().map(DeductionRule::canonical).collect();
    let mut out: Vec<(DeductionRule, (DeductionRule, DeductionRule))> = Vec::new();
    let mut seen: BTreeSet<DeductionRule> = BTreeSet::new();
    for inc in &l.rules {
        if classify(inc, &l.sig).ok() != Some(RuleClass::Increasing) {
            continue;
        }
        for other in &l.rules {
            let renamed_inc = inc.rename_apart();
            let renamed_other = other.rename_apart();
            for s in renamed_other.nonvar_premises() {
                let Some(child) = close_pair(&renamed_inc, &renamed_other, s) else {
                    continue;
                };
                let child = simplify(&child);
                let canon = child.canonical();
                if existing.contains(&canon) {
                    continue;
                }
                if seen.insert(canon) {
                    out.push((child, (inc.clone(), other.clone())));
                }
            }
        }
    }
    out
}

/// Bounded redundancy: freezing the rule's variables as fresh constants,
/// can the conclusion be re-derived from the premises with the other rules
/// in at most `k` steps?
pub fn is_redundant(rule: &DeductionRule, l: &DeductionSystem, k: usize) -> bool {
    if rule.is_trivial() {
        return true;
    }
    if k == 0 {
        return false;
    }
    // Freeze variables: substitute a fresh constant for each.
    let mut freeze = Substitution::identity();
    for x in rule.vars() {
        freeze.bind(&x, Term::constant(&fresh_var("frozen")));
    }
    let known: BTreeSet<Term> = rule.lhs.iter().map(|t| t.apply(&freeze)).collect();
    let goal = rule.rhs.apply(&freeze);
    let others: Vec<DeductionRule> = l
        .rules
        .iter()
        .filter(|r| r.canonical() != rule.canonical())
        .collect::<Vec<_>>()
        .into_iter()
        .cloned()
        .collect();
    // Candidate terms for instantiating premises during the backward
    // replay: the subterm closure of what is known plus the goal.
    let mut candidates: BTreeSet<Term> = BTreeSet::new();
    for t in known.iter().chain([&goal]) {
        candidates.extend(t.subterms(false));
    }
    derivable_bounded(&goal, &known, &others, k, &candidates)
}

/// Ground backward search: is `goal` derivable from `known` in at most `k`
/// rule applications, instantiating open premise variables from
/// `candidates`?
fn derivable_bounded(
    goal: &Term,
    known: &BTreeSet<Term>,
    rules: &[DeductionRule],
    k: usize,
    candidates: &BTreeSet<Term>,
) -> bool {
    if known.contains(goal) {
        return true;
    }
    if k == 0 {
        return false;
    }
    for rule in rules {
        let rule = rule.rename_apart();
        let Some(sigma) = match_term(&rule.rhs, goal) else {
            continue;
        };
        let premises: Vec<Term> = rule.lhs.iter().map(|t| t.apply(&sigma)).collect();
        if premises_derivable(&premises, known, rules, k - 1, candidates) {
            return true;
        }
    }
    false
}

/// Check a premise list, enumerating instantiations of still-open variables
/// over the candidate pool.
fn premises_derivable(
    premises: &[Term],
    known: &BTreeSet<Term>,
    rules: &[DeductionRule],
    k: usize,
    candidates: &BTreeSet<Term>,
) -> bool {
    match premises.split_first() {
        None => true,
        Some((p, rest)) => {
            if p.is_ground() {
                return derivable_bounded(p, known, rules, k, candidates)
                    && premises_derivable(rest, known, rules, k, candidates);
            }
            // Open premise: try every candidate instantiation.
            for c in candidates {
                let Some(sigma) = match_term(p, c) else {
                    continue;
                };
                if !derivable_bounded(c, known, rules, k, candidates) {
                    continue;
                }
                let rest: Vec<Term> = rest.iter().map(|t| t.apply(&sigma)).collect();
                if premises_derivable(&rest, known, rules, k, candidates) {
                    return true;
                }
            }
            false
        }
    }
}

/// Provenance of one rule of a saturated system: `None` parents for Step 1
/// (variant-lifted) rules, the closure parent pair otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOrigin {
    pub rule: DeductionRule,
    pub parents: Option<(DeductionRule, DeductionRule)>,
}

/// Run both saturation steps to a fixpoint under the configured bounds.
pub fn saturate(
    l0: &DeductionSystem,
    r: &RewriteSystem,
    cfg: &SaturationConfig,
) -> Result<SaturationOutcome, SaturationError> {
    Ok(saturate_traced(l0, r, cfg)?.0)
}

/// [`saturate`], additionally reporting the provenance of every rule of the
/// resulting (or partial) system.
pub fn saturate_traced(
    l0: &DeductionSystem,
    r: &RewriteSystem,
    cfg: &SaturationConfig,
) -> Result<(SaturationOutcome, Vec<RuleOrigin>), SaturationError> {
    use std::collections::BTreeMap;
    let mut sys = step1(l0, r, cfg.variant_depth)?;
    // Normalize Step 1 output once more for safety: conclusions must be in
    // normal form for the closure unifications to make sense syntactically.
    for rule in &mut sys.rules {
        rule.rhs = normalize(&rule.rhs, r, DEFAULT_STEP_BUDGET)
            .map_err(VariantError::from)?;
    }
    let mut origins: BTreeMap<DeductionRule, Option<(DeductionRule, DeductionRule)>> = sys
        .rules
        .iter()
        .map(|rule| (rule.canonical(), None))
        .collect();
    let origins_of = |sys: &DeductionSystem,
                      origins: &BTreeMap<DeductionRule, Option<(DeductionRule, DeductionRule)>>|
     -> Vec<RuleOrigin> {
        sys.rules
            .iter()
            .map(|rule| RuleOrigin {
                rule: rule.clone(),
                parents: origins.get(&rule.canonical()).cloned().flatten(),
            })
            .collect()
    };
    for _round in 0..cfg.max_rounds {
        let new_rules = closure_step_traced(&sys);
        let mut admitted_any = false;
        let mut offending = Vec::new();
        for (child, parents) in new_rules {
            if sys.rules.len() >= cfg.max_rules {
                offending.push(child);
                continue;
            }
            // Rules whose conclusion already sits among their premises are
            // exempt from the replay check: they can never drive divergence
            // (they add no new conclusions), yet their closure children can
            // be essential, so they stay in the working set and are only
            // filtered from the final system below.
            if cfg.redundancy_steps > 0
                && !child.is_trivial()
                && is_redundant(&child, &sys, cfg.redundancy_steps)
            {
                continue;
            }
            let canon = child.canonical();
            if sys.insert_rule(child) {
                admitted_any = true;
                origins.insert(canon, Some(parents));
            }
        }
        if !offending.is_empty() {
            let report = origins_of(&sys, &origins);
            return Ok((
                SaturationOutcome::Diverged {
                    partial: sys,
                    offending,
                },
                report,
            ));
        }
        if !admitted_any {
            let done = finish(sys, cfg);
            let report = origins_of(&done, &origins);
            return Ok((SaturationOutcome::Saturated(done), report));
        }
    }
    // Round bound hit: one more closure pass tells us what was pending.
    let offending = closure_step(&sys);
    if offending.is_empty() {
        let done = finish(sys, cfg);
        let report = origins_of(&done, &origins);
        Ok((SaturationOutcome::Saturated(done), report))
    } else {
        let report = origins_of(&sys, &origins);
        Ok((
            SaturationOutcome::Diverged {
                partial: sys,
                offending,
            },
            report,
        ))
    }
}

/// Final clean-up of a saturated system: under `delete_trivial`, drop the
/// rules that are instances of the membership axiom (conclusion among the
/// premises, up to unused variable premises).
fn finish(mut sys: DeductionSystem, cfg: &SaturationConfig) -> DeductionSystem {
    if cfg.delete_trivial {
        sys.rules.retain(|r| !deletable_trivial(r));
    }
    sys
}
