//! First-order terms, signatures and substitutions.
//!
//! Terms are immutable values: either a variable or an application of a
//! declared symbol to an argument list whose length matches the symbol's
//! arity.  Equality is literal (syntactic); equality modulo a rewrite theory
//! lives in [`crate::rewrite`].  Variables are identified by name; fresh
//! names are drawn from a process-wide counter so that renaming rules apart
//! never captures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// What role a symbol plays in the signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolKind {
    /// Proper function symbol (arity may still be zero for theory constants).
    Constructor,
    /// Free constant: arity zero, never mentioned in rewrite rules.
    FreeConstant,
}

/// A declared function symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
    pub kind: SymbolKind,
}

/// A signature: the declared symbols together with a total precedence used
/// by the path ordering.  The precedence defaults to declaration order
/// (later declarations are larger) and can be overridden wholesale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    symbols: IndexMap<String, Symbol>,
    /// Symbol names from smallest to largest.
    precedence: Vec<String>,
}

/// Errors raised while building or using a signature.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("symbol `{0}` declared twice")]
    Duplicate(String),
    #[error("symbol `{0}` is not declared")]
    Undeclared(String),
    #[error("symbol `{name}` used with {used} arguments but declared with arity {declared}")]
    Arity {
        name: String,
        declared: usize,
        used: usize,
    },
    #[error("precedence must list every declared symbol exactly once")]
    BadPrecedence,
}

impl Signature {
    pub fn new() -> Self {
        Signature {
            symbols: IndexMap::new(),
            precedence: Vec::new(),
        }
    }

    pub fn declare(&mut self, name: &str, arity: usize, kind: SymbolKind) -> Result<(), SignatureError> {
        if self.symbols.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        self.symbols.insert(
            name.to_string(),
            Symbol {
                name: name.to_string(),
                arity,
                kind,
            },
        );
        self.precedence.push(name.to_string());
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    /// Replace the precedence with an explicit smallest-to-largest listing.
    pub fn set_precedence(&mut self, order: &[String]) -> Result<(), SignatureError> {
        let given: BTreeSet<&String> = order.iter().collect();
        if order.len() != self.symbols.len() || given.len() != order.len() {
            return Err(SignatureError::BadPrecedence);
        }
        for name in order {
            if !self.symbols.contains_key(name.as_str()) {
                return Err(SignatureError::Undeclared(name.clone()));
            }
        }
        self.precedence = order.to_vec();
        Ok(())
    }

    pub fn precedence(&self) -> &[String] {
        &self.precedence
    }

    /// Rank of a symbol in the precedence (larger = greater).
    pub fn rank(&self, name: &str) -> Result<usize, SignatureError> {
        self.precedence
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SignatureError::Undeclared(name.to_string()))
    }

    /// Check that every symbol occurring in `t` is declared with the right
    /// arity.
    pub fn check_term(&self, t: &Term) -> Result<(), SignatureError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                let sym = self
                    .get(f)
                    .ok_or_else(|| SignatureError::Undeclared(f.clone()))?;
                if sym.arity != args.len() {
                    return Err(SignatureError::Arity {
                        name: f.clone(),
                        declared: sym.arity,
                        used: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }
}

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

/// A first-order term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

static FRESH_COUNTER: AtomicU64 = AtomicU64::new(0);

/// A fresh variable name guaranteed distinct from every name produced so far
/// in this process and from anything a parser accepts (parsers reject `#`).
pub fn fresh_var(hint: &str) -> String {
    let n = FRESH_COUNTER.fetch_add(1, AtomicOrdering::Relaxed);
    format!("{hint}#{n}")
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.to_string(), args)
    }

    pub fn constant(c: &str) -> Term {
        Term::App(c.to_string(), vec![])
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Number of symbol and variable occurrences.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// The set of variables occurring in the term.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_vars(&mut acc);
        acc
    }

    fn collect_vars(&self, acc: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                acc.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(acc)),
        }
    }

    /// Sub(t) (strict = false) or SSub(t) (strict = true).
    pub fn subterms(&self, strict: bool) -> BTreeSet<Term> {
        let mut acc = BTreeSet::new();
        self.collect_subterms(&mut acc);
        if strict {
            acc.remove(self);
        }
        acc
    }

    fn collect_subterms(&self, acc: &mut BTreeSet<Term>) {
        acc.insert(self.clone());
        if let Term::App(_, args) = self {
            args.iter().for_each(|a| a.collect_subterms(acc));
        }
    }

    /// Homomorphic application of a substitution.
    pub fn apply(&self, sigma: &Substitution) -> Term {
        match self {
            Term::Var(x) => sigma.lookup(x).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.apply(sigma)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::App(g, args) => {
                write!(f, "{g}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// nvar over a collection of terms: the number of distinct variables.
pub fn count_vars<'a>(ts: impl IntoIterator<Item = &'a Term>) -> usize {
    let mut acc = BTreeSet::new();
    for t in ts {
        t.collect_vars(&mut acc);
    }
    acc.len()
}

/// Variables of a collection of terms.
pub fn vars_of<'a>(ts: impl IntoIterator<Item = &'a Term>) -> BTreeSet<String> {
    let mut acc = BTreeSet::new();
    for t in ts {
        t.collect_vars(&mut acc);
    }
    acc
}

/// A substitution with finite support.  Bindings with `x ↦ x` are never
/// stored, so the map's domain is exactly the support.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn identity() -> Self {
        Substitution::default()
    }

    pub fn singleton(x: &str, t: Term) -> Self {
        let mut s = Substitution::identity();
        s.bind(x, t);
        s
    }

    pub fn bind(&mut self, x: &str, t: Term) {
        if t == Term::Var(x.to_string()) {
            self.bindings.remove(x);
        } else {
            self.bindings.insert(x.to_string(), t);
        }
    }

    pub fn lookup(&self, x: &str) -> Option<&Term> {
        self.bindings.get(x)
    }

    pub fn is_identity(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &String> {
        self.bindings.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Sequential composition: applying the result is applying `self` then
    /// `tau`.
    pub fn compose(&self, tau: &Substitution) -> Substitution {
        let mut out = Substitution::identity();
        for (x, t) in &self.bindings {
            out.bind(x, t.apply(tau));
        }
        for (y, t) in &tau.bindings {
            if !out.bindings.contains_key(y) && !self.bindings.contains_key(y) {
                out.bind(y, t.clone());
            }
        }
        out
    }

    /// Restrict the support to the given variables.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Substitution {
        let mut out = Substitution::identity();
        for (x, t) in &self.bindings {
            if keep.contains(x) {
                out.bind(x, t.clone());
            }
        }
        out
    }

    /// Map a function over every image.
    pub fn map_images(&self, f: impl Fn(&Term) -> Term) -> Substitution {
        let mut out = Substitution::identity();
        for (x, t) in &self.bindings {
            out.bind(x, f(t));
        }
        out
    }

    /// True when no bound variable occurs in any image.
    pub fn is_idempotent(&self) -> bool {
        let dom: BTreeSet<&String> = self.bindings.keys().collect();
        self.bindings
            .values()
            .all(|t| t.vars().iter().all(|v| !dom.contains(v)))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x} -> {t}")?;
        }
        write!(f, "}}")
    }
}

/// A renaming of `vars` to globally fresh variables.
pub fn renaming_apart(vars: &BTreeSet<String>) -> Substitution {
    let mut s = Substitution::identity();
    for v in vars {
        let base = v.split('#').next().unwrap_or(v);
        s.bind(v, Term::Var(fresh_var(base)));
    }
    s
}

/// Canonical renaming: variables are renamed to `v0, v1, …` in the order of
/// first occurrence along a left-to-right traversal of `ts`.  Two term lists
/// are equal up to renaming iff their canonical forms are equal.
pub fn canonical_renaming<'a>(ts: impl IntoIterator<Item = &'a Term>) -> Substitution {
    let mut s = Substitution::identity();
    let mut next = 0usize;
    let mut seen = BTreeSet::new();
    for t in ts {
        canon_walk(t, &mut s, &mut next, &mut seen);
    }
    s
}

fn canon_walk(t: &Term, s: &mut Substitution, next: &mut usize, seen: &mut BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            if seen.insert(x.clone()) {
                s.bind(x, Term::Var(format!("v{}", *next)));
                *next += 1;
            }
        }
        Term::App(_, args) => args.iter().for_each(|a| canon_walk(a, s, next, seen)),
    }
}
