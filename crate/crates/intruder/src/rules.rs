//! Deduction rules `l ↠ r` and deduction systems.
//!
//! A rule's left-hand side is a set of terms (premises); the right-hand side
//! is the conclusion.  Rule identity throughout the crate is modulo variable
//! renaming with the left-hand side treated as a set, which is what makes
//! saturation loops close.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::term::{canonical_renaming, vars_of, Signature, Substitution, Term};

/// Whether rule right-hand sides are understood modulo the rewrite theory
/// (the initial system ℒ₀) or syntactically (everything saturation builds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoryTag {
    ModuloTheory,
    EmptyTheory,
}

/// A deduction rule: from the premises `lhs`, deduce `rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeductionRule {
    pub lhs: BTreeSet<Term>,
    pub rhs: Term,
}

impl DeductionRule {
    pub fn new(lhs: impl IntoIterator<Item = Term>, rhs: Term) -> Self {
        DeductionRule {
            lhs: lhs.into_iter().collect(),
            rhs,
        }
    }

    /// All terms of the rule: premises then conclusion.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.lhs.iter().chain(std::iter::once(&self.rhs))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        vars_of(self.terms())
    }

    /// The variable premises l_x.
    pub fn var_premises(&self) -> impl Iterator<Item = &Term> {
        self.lhs.iter().filter(|t| t.is_var())
    }

    /// The non-variable premises l₁,…,lₙ.
    pub fn nonvar_premises(&self) -> impl Iterator<Item = &Term> {
        self.lhs.iter().filter(|t| !t.is_var())
    }

    pub fn apply(&self, sigma: &Substitution) -> DeductionRule {
        DeductionRule {
            lhs: self.lhs.iter().map(|t| t.apply(sigma)).collect(),
            rhs: self.rhs.apply(sigma),
        }
    }

    /// Rename every variable of the rule to a globally fresh one.
    pub fn rename_apart(&self) -> DeductionRule {
        self.apply(&crate::term::renaming_apart(&self.vars()))
    }

    /// Canonical form under variable renaming with the left-hand side as a
    /// set: the minimum, over all orderings of the premises, of the rule
    /// with variables renumbered in first-occurrence order.  Equal canonical
    /// forms characterise equality up to renaming.
    ///
    /// Enumerating premise orderings is factorial, so rules with more than
    /// [`CANONICAL_PREMISE_LIMIT`] premises fall back to a deterministic
    /// single ordering (premises sorted by their variable-erased skeleton).
    /// The fallback can distinguish some renamings of the same rule; such
    /// wide rules only ever arise on diverging saturation runs, where the
    /// effect is at worst an earlier divergence report.
    pub fn canonical(&self) -> DeductionRule {
        let mut premises: Vec<&Term> = self.lhs.iter().collect();
        if premises.len() > CANONICAL_PREMISE_LIMIT {
            premises.sort_by_key(|t| skeleton(t));
            let ren = canonical_renaming(premises.iter().copied().chain([&self.rhs]));
            return self.apply(&ren);
        }
        let mut best: Option<DeductionRule> = None;
        for_each_permutation(&premises, &mut |order| {
            let ren = canonical_renaming(order.iter().copied().chain([&self.rhs]));
            let cand = self.apply(&ren);
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
        });
        best.expect("permutation enumeration yields at least the empty order")
    }

    /// True when the conclusion is itself one of the premises.
    pub fn is_trivial(&self) -> bool {
        self.lhs.contains(&self.rhs)
    }

    /// Well-formedness used throughout: a rule must have premises, or else a
    /// closed conclusion (a public constant the attacker can invent).
    pub fn is_wellformed(&self) -> bool {
        !self.lhs.is_empty() || self.rhs.is_ground()
    }

    /// ℒ₀ shape: premises x₁,…,xₙ (distinct variables), conclusion
    /// f(x₁,…,xₙ).
    pub fn is_constructor_shape(&self) -> bool {
        match &self.rhs {
            Term::Var(_) => false,
            Term::App(_, args) => {
                let distinct: BTreeSet<&Term> = args.iter().collect();
                args.iter().all(Term::is_var)
                    && distinct.len() == args.len()
                    && self.lhs == args.iter().cloned().collect()
            }
        }
    }
}

/// Premise-count threshold above which `canonical` stops enumerating
/// orderings (6! = 720 candidates keeps saturation rounds fast).
pub const CANONICAL_PREMISE_LIMIT: usize = 6;

/// Renaming-invariant sort key: the term's print form with every variable
/// erased to a hole.
fn skeleton(t: &Term) -> String {
    match t {
        Term::Var(_) => "_".into(),
        Term::App(f, args) => {
            let mut s = f.clone();
            if !args.is_empty() {
                s.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    s.push_str(&skeleton(a));
                }
                s.push(')');
            }
            s
        }
    }
}

/// Visit every ordering of `items` (including the empty one when `items` is
/// empty).
fn for_each_permutation<'a>(items: &[&'a Term], visit: &mut impl FnMut(&[&'a Term])) {
    fn go<'a>(
        rest: &mut Vec<&'a Term>,
        acc: &mut Vec<&'a Term>,
        visit: &mut impl FnMut(&[&'a Term]),
    ) {
        if rest.is_empty() {
            visit(acc);
            return;
        }
        for i in 0..rest.len() {
            let item = rest.remove(i);
            acc.push(item);
            go(rest, acc, visit);
            acc.pop();
            rest.insert(i, item);
        }
    }
    go(&mut items.to_vec(), &mut Vec::new(), visit);
}

impl fmt::Display for DeductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.lhs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, " => {}", self.rhs)
    }
}

/// A set of deduction rules over a signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductionSystem {
    pub rules: Vec<DeductionRule>,
    pub sig: Signature,
    pub theory_tag: TheoryTag,
}

impl DeductionSystem {
    pub fn new(rules: Vec<DeductionRule>, sig: Signature, theory_tag: TheoryTag) -> Self {
        DeductionSystem {
            rules,
            sig,
            theory_tag,
        }
    }

    /// Membership modulo renaming (lhs as a set).
    pub fn contains_rule(&self, rule: &DeductionRule) -> bool {
        let c = rule.canonical();
        self.rules.iter().any(|r| r.canonical() == c)
    }

    /// Push a rule unless an equal one (modulo renaming) is present.
    /// Returns true when the rule was new.
    pub fn insert_rule(&mut self, rule: DeductionRule) -> bool {
        if self.contains_rule(&rule) {
            false
        } else {
            self.rules.push(rule);
            true
        }
    }

    /// Equality of rule sets modulo renaming.
    pub fn same_rules(&self, other: &DeductionSystem) -> bool {
        let a: BTreeSet<DeductionRule> = self.rules.iter().map(|r| r.canonical()).collect();
        let b: BTreeSet<DeductionRule> = other.rules.iter().map(|r| r.canonical()).collect();
        a == b
    }
}
