//! Convergent rewrite systems and normalization.
//!
//! Normalization uses a leftmost-innermost strategy with a step budget so
//! that a non-terminating input system surfaces as an error instead of a
//! hang.  Orientation (every rule decreasing under the LPO) is checked when
//! a system is validated; critical-pair joinability is offered as a
//! convergence diagnostic, not a gate.

use serde::{Deserialize, Serialize};

use crate::order::{lpo_compare, OrderResult};
use crate::term::{Signature, SignatureError, Substitution, Term};
use crate::unify::{match_term, mgu_terms};

/// An oriented rewrite rule `lhs -> rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    pub lhs: Term,
    pub rhs: Term,
}

impl RewriteRule {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        RewriteRule { lhs, rhs }
    }

    /// Structural well-formedness: lhs is not a variable and the rhs
    /// introduces no variables.
    pub fn is_wellformed(&self) -> bool {
        !self.lhs.is_var() && self.rhs.vars().is_subset(&self.lhs.vars())
    }

    pub fn rename_apart(&self) -> RewriteRule {
        let ren = crate::term::renaming_apart(&self.lhs.vars());
        RewriteRule {
            lhs: self.lhs.apply(&ren),
            rhs: self.rhs.apply(&ren),
        }
    }
}

impl std::fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

/// A rewrite system over a signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteSystem {
    pub rules: Vec<RewriteRule>,
    pub sig: Signature,
}

/// Errors raised by rewriting.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("step budget of {budget} exhausted while normalizing {term}")]
    Divergence { term: Term, budget: usize },
    #[error("rule {rule} is not oriented: {reason}")]
    Unoriented { rule: String, reason: String },
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// Default step budget for normalization.
pub const DEFAULT_STEP_BUDGET: usize = 10_000;

impl RewriteSystem {
    pub fn new(rules: Vec<RewriteRule>, sig: Signature) -> Self {
        RewriteSystem { rules, sig }
    }

    /// Check structural well-formedness and LPO orientation of every rule.
    pub fn check_oriented(&self) -> Result<(), RewriteError> {
        for rule in &self.rules {
            if !rule.is_wellformed() {
                return Err(RewriteError::Unoriented {
                    rule: rule.to_string(),
                    reason: "variable lhs or rhs introduces variables".into(),
                });
            }
            match lpo_compare(&rule.lhs, &rule.rhs, &self.sig)? {
                OrderResult::Greater => {}
                other => {
                    return Err(RewriteError::Unoriented {
                        rule: rule.to_string(),
                        reason: format!("lhs vs rhs compares as {other:?}"),
                    })
                }
            }
        }
        Ok(())
    }
}

/// Normalize `t`: the unique normal form for a convergent system.
pub fn normalize(t: &Term, r: &RewriteSystem, step_budget: usize) -> Result<Term, RewriteError> {
    let mut steps = 0usize;
    normalize_inner(t, r, step_budget, &mut steps)
}

fn normalize_inner(
    t: &Term,
    r: &RewriteSystem,
    budget: usize,
    steps: &mut usize,
) -> Result<Term, RewriteError> {
    match t {
        Term::Var(_) => Ok(t.clone()),
        Term::App(f, args) => {
            // Innermost: arguments first.
            let args = args
                .iter()
                .map(|a| normalize_inner(a, r, budget, steps))
                .collect::<Result<Vec<_>, _>>()?;
            let mut current = Term::App(f.clone(), args);
            // Root steps; a contracted redex may expose nested redexes in
            // the substituted rhs, so re-normalize after each step.
            loop {
                let mut reduced = None;
                for rule in &r.rules {
                    if let Some(sigma) = match_term(&rule.lhs, &current) {
                        reduced = Some(rule.rhs.apply(&sigma));
                        break;
                    }
                }
                match reduced {
                    None => return Ok(current),
                    Some(next) => {
                        *steps += 1;
                        if *steps > budget {
                            return Err(RewriteError::Divergence {
                                term: t.clone(),
                                budget,
                            });
                        }
                        current = normalize_inner(&next, r, budget, steps)?;
                    }
                }
            }
        }
    }
}

/// Equality modulo the theory: identical normal forms.
pub fn eq_mod_theory(s: &Term, t: &Term, r: &RewriteSystem) -> Result<bool, RewriteError> {
    Ok(normalize(s, r, DEFAULT_STEP_BUDGET)? == normalize(t, r, DEFAULT_STEP_BUDGET)?)
}

/// Normalize every image of a substitution.
pub fn normalize_subst(
    sigma: &Substitution,
    r: &RewriteSystem,
    step_budget: usize,
) -> Result<Substitution, RewriteError> {
    let mut out = Substitution::identity();
    for (x, t) in sigma.iter() {
        out.bind(x, normalize(t, r, step_budget)?);
    }
    Ok(out)
}

/// True iff every rule's rhs is a strict subterm of its lhs.
pub fn check_subterm_convergent(r: &RewriteSystem) -> bool {
    r.rules
        .iter()
        .all(|rule| rule.lhs.subterms(true).contains(&rule.rhs))
}

/// All critical pairs of the system: overlaps of a renamed rule's lhs into a
/// non-variable position of another (or the same) rule's lhs.  Each pair is
/// the two reducts of the overlapped term.
pub fn critical_pairs(r: &RewriteSystem) -> Vec<(Term, Term)> {
    let mut pairs = Vec::new();
    for (i, outer) in r.rules.iter().enumerate() {
        for (j, inner) in r.rules.iter().enumerate() {
            let inner = inner.rename_apart();
            for pos in positions(&outer.lhs) {
                let sub = at_position(&outer.lhs, &pos);
                if sub.is_var() {
                    continue;
                }
                // Skip the trivial root self-overlap.
                if i == j && pos.is_empty() {
                    continue;
                }
                if let Ok(sigma) = mgu_terms(sub, &inner.lhs) {
                    let left = outer.rhs.apply(&sigma);
                    let right = replace_at(&outer.lhs, &pos, &inner.rhs).apply(&sigma);
                    pairs.push((left, right));
                }
            }
        }
    }
    pairs
}

/// All positions of a term, root first, as argument index paths.
pub fn positions(t: &Term) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    if let Term::App(_, args) = t {
        for (i, a) in args.iter().enumerate() {
            for mut p in positions(a) {
                p.insert(0, i);
                out.push(p);
            }
        }
    }
    out
}

/// Subterm at a position (which must exist).
pub fn at_position<'a>(t: &'a Term, pos: &[usize]) -> &'a Term {
    match pos.split_first() {
        None => t,
        Some((&i, rest)) => match t {
            Term::App(_, args) => at_position(&args[i], rest),
            Term::Var(_) => panic!("position beyond a variable"),
        },
    }
}

/// Replace the subterm at a position.
pub fn replace_at(t: &Term, pos: &[usize], new: &Term) -> Term {
    match pos.split_first() {
        None => new.clone(),
        Some((&i, rest)) => match t {
            Term::App(f, args) => {
                let mut args = args.clone();
                args[i] = replace_at(&args[i], rest, new);
                Term::App(f.clone(), args)
            }
            Term::Var(_) => panic!("position beyond a variable"),
        },
    }
}
