//! Syntactic unification and matching.
//!
//! `mgu` implements Martelli–Montanari style unification with an occurs
//! check, returning an idempotent most general unifier.  `match_term` is
//! one-sided: only pattern variables may be instantiated.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::term::{Substitution, Term};

/// A set of equations to be solved simultaneously.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnificationSystem {
    pub equations: Vec<(Term, Term)>,
}

impl UnificationSystem {
    pub fn new(equations: Vec<(Term, Term)>) -> Self {
        UnificationSystem { equations }
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn apply(&self, sigma: &Substitution) -> UnificationSystem {
        UnificationSystem {
            equations: self
                .equations
                .iter()
                .map(|(l, r)| (l.apply(sigma), r.apply(sigma)))
                .collect(),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        crate::term::vars_of(self.equations.iter().flat_map(|(l, r)| [l, r]))
    }
}

impl fmt::Display for UnificationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, r)) in self.equations.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l} = {r}")?;
        }
        Ok(())
    }
}

/// Why unification failed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UnifyError {
    #[error("symbol clash: {0} vs {1}")]
    Clash(Term, Term),
    #[error("occurs check: {var} occurs in {term}")]
    Occurs { var: String, term: Term },
}

/// Most general unifier of a set of equations, or a failure explaining the
/// first conflict found.
pub fn mgu(system: &UnificationSystem) -> Result<Substitution, UnifyError> {
    let mut sigma = Substitution::identity();
    let mut work: Vec<(Term, Term)> = system.equations.clone();
    while let Some((s, t)) = work.pop() {
        let s = s.apply(&sigma);
        let t = t.apply(&sigma);
        match (s, t) {
            (s, t) if s == t => {}
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.vars().contains(&x) {
                    return Err(UnifyError::Occurs { var: x, term: t });
                }
                let bind = Substitution::singleton(&x, t);
                sigma = sigma.compose(&bind);
            }
            (Term::App(f, ss), Term::App(g, ts)) => {
                if f != g || ss.len() != ts.len() {
                    return Err(UnifyError::Clash(Term::App(f, ss), Term::App(g, ts)));
                }
                work.extend(ss.into_iter().zip(ts));
            }
        }
    }
    debug_assert!(sigma.is_idempotent());
    Ok(sigma)
}

/// Unify two terms.
pub fn mgu_terms(s: &Term, t: &Term) -> Result<Substitution, UnifyError> {
    mgu(&UnificationSystem::new(vec![(s.clone(), t.clone())]))
}

/// Match `pattern` against `subject`: find σ with support inside
/// Var(pattern) such that pattern·σ = subject.  Returns None when no such σ
/// exists.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::identity();
    if match_into(pattern, subject, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

/// Match a list of pattern/subject pairs simultaneously (shared variables
/// must agree across pairs).
pub fn match_terms(pairs: &[(&Term, &Term)]) -> Option<Substitution> {
    let mut sigma = Substitution::identity();
    for (p, s) in pairs {
        if !match_into(p, s, &mut sigma) {
            return None;
        }
    }
    Some(sigma)
}

fn match_into(pattern: &Term, subject: &Term, sigma: &mut Substitution) -> bool {
    match pattern {
        Term::Var(x) => match sigma.lookup(x) {
            Some(bound) => bound == subject,
            None => {
                sigma.bind(x, subject.clone());
                true
            }
        },
        Term::App(f, ps) => match subject {
            Term::App(g, ss) if f == g && ps.len() == ss.len() => ps
                .iter()
                .zip(ss)
                .all(|(p, s)| match_into(p, s, sigma)),
            _ => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgu_simple_binding() {
        let s = UnificationSystem::new(vec![(Term::var("x"), Term::constant("a"))]);
        let sigma = mgu(&s).unwrap();
        assert_eq!(sigma.lookup("x"), Some(&Term::constant("a")));
    }

    #[test]
    fn mgu_decomposition() {
        let l = Term::app("f", vec![Term::var("x"), Term::constant("b")]);
        let r = Term::app("f", vec![Term::constant("a"), Term::var("y")]);
        let sigma = mgu_terms(&l, &r).unwrap();
        assert_eq!(sigma.lookup("x"), Some(&Term::constant("a")));
        assert_eq!(sigma.lookup("y"), Some(&Term::constant("b")));
    }

    #[test]
    fn mgu_occurs_check() {
        let l = Term::var("x");
        let r = Term::app("f", vec![Term::var("x")]);
        assert!(matches!(mgu_terms(&l, &r), Err(UnifyError::Occurs { .. })));
    }

    #[test]
    fn mgu_clash() {
        let l = Term::constant("a");
        let r = Term::constant("b");
        assert!(matches!(mgu_terms(&l, &r), Err(UnifyError::Clash(_, _))));
    }

    #[test]
    fn mgu_chained_variables_idempotent() {
        let s = UnificationSystem::new(vec![
            (Term::var("x"), Term::app("f", vec![Term::var("y")])),
            (Term::var("y"), Term::constant("a")),
        ]);
        let sigma = mgu(&s).unwrap();
        assert!(sigma.is_idempotent());
        assert_eq!(
            Term::var("x").apply(&sigma),
            Term::app("f", vec![Term::constant("a")])
        );
    }

    #[test]
    fn match_examples() {
        let p = Term::app("enc", vec![Term::var("x"), Term::var("y")]);
        let s = Term::app("enc", vec![Term::constant("s"), Term::constant("k")]);
        let sigma = match_term(&p, &s).unwrap();
        assert_eq!(p.apply(&sigma), s);

        assert_eq!(
            match_term(&Term::var("x"), &Term::app("f", vec![Term::constant("a")]))
                .unwrap()
                .lookup("x"),
            Some(&Term::app("f", vec![Term::constant("a")]))
        );

        let twice = Term::app("f", vec![Term::var("x"), Term::var("x")]);
        let diff = Term::app("f", vec![Term::constant("a"), Term::constant("b")]);
        assert!(match_term(&twice, &diff).is_none());
    }
}
