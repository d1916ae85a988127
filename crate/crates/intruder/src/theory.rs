//! Theory catalog and the two text interchange formats.
//!
//! A `TheoryBundle` packages a signature, the convergent rewrite system
//! generating the equational theory, and the constructor deduction rules
//! ℒ₀.  Four theories ship built in: `dy` (symmetric/asymmetric encryption
//! and pairing with explicit destructors), `dsks` (signatures with
//! duplicate-signature key selection), `blind` (blind signatures) and
//! `twostack` (a two-stack machine step theory used as a negative test for
//! the contracting criterion).
//!
//! # Theory file format
//!
//! Line-oriented, `#` comments.  Sections in order:
//!
//! ```text
//! theory dy
//! signature
//!   a/0 free
//!   pair/2
//! precedence
//!   a pair
//! rules
//!   fst(pair(X,Y)) -> X
//! deduction
//!   X, Y => pair(X,Y)
//! ```
//!
//! Identifiers starting with an uppercase letter are variables; everything
//! else must be declared in the `signature` section.  `free` marks a free
//! constant (arity 0, never used in rewrite rules).  The `precedence` line
//! lists all symbols from smallest to largest and may be omitted
//! (declaration order applies).  Deduction rules with empty premises are
//! written `=> one`.
//!
//! # Constraint file format
//!
//! ```text
//! knows enc(s,k), k; deduce V
//! eq V = s
//! ```
//!
//! Each `knows … ; deduce …` line is one constraint carrying its full
//! knowledge set; `eq` lines form the unification system.  Well-formedness
//! (knowledge monotonicity and variable origination) is enforced at parse
//! time.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constraints::{check_wellformed, ConstraintSystem, DeductionConstraint};
use crate::rewrite::{RewriteRule, RewriteSystem};
use crate::rules::{DeductionRule, DeductionSystem, TheoryTag};
use crate::term::{Signature, Substitution, SymbolKind, Term};
use crate::unify::UnificationSystem;

/// A named theory: signature, rewrite system ℛ, constructor rules ℒ₀.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryBundle {
    pub name: String,
    pub sig: Signature,
    pub rewrites: RewriteSystem,
    pub l0: DeductionSystem,
}

/// Parse or validation failure, with source position where applicable.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["dy", "dsks", "blind", "twostack"];

/// Construct a built-in theory.
pub fn builtin(name: &str) -> Result<TheoryBundle, ParseError> {
    let text = match name {
        "dy" => DY_TEXT,
        "dsks" => DSKS_TEXT,
        "blind" => BLIND_TEXT,
        "twostack" => TWOSTACK_TEXT,
        other => {
            return Err(ParseError::new(
                0,
                0,
                format!("unknown builtin theory `{other}` (expected one of {BUILTIN_NAMES:?})"),
            ))
        }
    };
    parse_theory(text)
}

/// Dolev–Yao with explicit destructors: pairing with projections, and
/// symmetric/asymmetric encryption with explicit decryption.
const DY_TEXT: &str = "\
theory dy
signature
  a/0 free
  b/0 free
  s/0 free
  k/0 free
  pk/1
  sk/1
  pair/2
  fst/1
  snd/1
  enc/2
  dec/2
  aenc/2
  adec/2
rules
  dec(enc(X,Y),Y) -> X
  enc(dec(X,Y),Y) -> X
  adec(aenc(X,pk(Y)),sk(Y)) -> X
  aenc(adec(X,sk(Y)),pk(Y)) -> X
  fst(pair(X,Y)) -> X
  snd(pair(X,Y)) -> Y
deduction
  X, Y => pair(X,Y)
  X => fst(X)
  X => snd(X)
  X, Y => aenc(X,Y)
  X, Y => adec(X,Y)
  X, Y => enc(X,Y)
  X, Y => dec(X,Y)
";

/// Digital signatures with duplicate-signature key selection.  The fourth
/// rewrite rule restores convergence of the first three equations.
const DSKS_TEXT: &str = "\
theory dsks
signature
  a/0 free
  b/0 free
  c/0 free
  zero/0
  one/0
  pk/1
  sk/1
  pkp/2
  skp/2
  sig/2
  ver/3
rules
  ver(X,sig(X,sk(Y)),pk(Y)) -> one
  ver(X,sig(X,skp(Y1,Y2)),pkp(Y1,Y2)) -> one
  ver(X,sig(X,sk(Y)),pkp(pk(Y),sig(X,sk(Y)))) -> one
  sig(X,skp(pk(Y),sig(X,sk(Y)))) -> sig(X,sk(Y))
deduction
  X, Y => sig(X,Y)
  X, Y, Z => ver(X,Y,Z)
  X, Y => skp(X,Y)
  X, Y => pkp(X,Y)
  => zero
  => one
";

/// Blind signatures: signing, verification, blinding and unblinding, with
/// unblinding commuting over signatures.
const BLIND_TEXT: &str = "\
theory blind
signature
  a/0 free
  b/0 free
  c/0 free
  pk/1
  sk/1
  sig/2
  ver/2
  bl/2
  ubl/2
rules
  ver(sig(X,sk(Y)),pk(Y)) -> X
  ubl(bl(X,Y),Y) -> X
  ubl(sig(bl(X,Y),sk(Z)),Y) -> sig(X,sk(Z))
deduction
  X, Y => sig(X,Y)
  X, Y => ver(X,Y)
  X, Y => bl(X,Y)
  X, Y => ubl(X,Y)
";

/// Two-stack machine step theory with a single transition from `q0` to
/// `qf`.  The precedence declares `qf` before `q0` and `g` before `t1` so
/// the transition rule is oriented left to right.  There is no constructor
/// rule for `g`.
const TWOSTACK_TEXT: &str = "\
theory twostack
signature
  a/0 free
  bot/0
  qf/0
  q0/0
  ua/1
  st/4
  f/2
  g/1
  t1/1
rules
  t1(g(f(q0,f(qf,X)))) -> g(f(qf,X))
deduction
  => bot
  => qf
  => q0
  X => ua(X)
  X1, X2, X3, X4 => st(X1,X2,X3,X4)
  X, Y => f(X,Y)
  X => t1(X)
";

// ---------------------------------------------------------------------------
// Lexing / term parsing
// ---------------------------------------------------------------------------

/// Cursor over a single logical line, tracking columns for diagnostics.
struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            other => Err(ParseError::new(
                self.line,
                self.col(),
                format!("expected `{c}`, found {}", describe(other)),
            )),
        }
    }

    fn try_eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.chars.get(self.pos),
                    Some(c) if c.is_ascii_alphanumeric() || *c == '_' || *c == '\'')
                {
                    self.pos += 1;
                }
                Ok(self.chars[start..self.pos].iter().collect())
            }
            other => Err(ParseError::new(
                self.line,
                self.col(),
                format!("expected identifier, found {}", describe(other)),
            )),
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(ParseError::new(
                self.line,
                self.col(),
                format!("unexpected trailing `{c}`"),
            )),
        }
    }

    fn term(&mut self, sig: &Signature) -> Result<Term, ParseError> {
        let col = self.col();
        let name = self.ident()?;
        if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            return Ok(Term::var(&name));
        }
        let Some(sym) = sig.get(&name) else {
            return Err(ParseError::new(
                self.line,
                col,
                format!("undeclared symbol `{name}`"),
            ));
        };
        let arity = sym.arity;
        let mut args = Vec::new();
        if self.try_eat('(') {
            loop {
                args.push(self.term(sig)?);
                if !self.try_eat(',') {
                    break;
                }
            }
            self.eat(')')?;
        }
        if args.len() != arity {
            return Err(ParseError::new(
                self.line,
                col,
                format!(
                    "symbol `{name}` has arity {arity} but is applied to {} arguments",
                    args.len()
                ),
            ));
        }
        Ok(Term::app(&name, args))
    }

    fn term_list(&mut self, sig: &Signature) -> Result<Vec<Term>, ParseError> {
        let mut ts = vec![self.term(sig)?];
        while self.try_eat(',') {
            ts.push(self.term(sig)?);
        }
        Ok(ts)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let col = self.col();
        let id = self.ident()?;
        if id == kw {
            Ok(())
        } else {
            Err(ParseError::new(
                self.line,
                col,
                format!("expected `{kw}`, found `{id}`"),
            ))
        }
    }
}

fn describe(c: Option<char>) -> String {
    match c {
        Some(c) => format!("`{c}`"),
        None => "end of line".into(),
    }
}

/// Strip comments and blanks, keeping 1-based line numbers.
fn logical_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

// ---------------------------------------------------------------------------
// Theory files
// ---------------------------------------------------------------------------

#[derive(PartialEq)]
enum Section {
    Preamble,
    Signature,
    Precedence,
    Rules,
    Deduction,
}

/// Parse a theory file and validate every bundle invariant: declared
/// symbols, oriented rewrite rules, ℒ₀ constructor shape.
pub fn parse_theory(text: &str) -> Result<TheoryBundle, ParseError> {
    let mut name = String::from("theory");
    let mut sig = Signature::new();
    let mut precedence: Option<(usize, Vec<String>)> = None;
    let mut rewrites: Vec<RewriteRule> = Vec::new();
    let mut deduction: Vec<(usize, DeductionRule)> = Vec::new();
    let mut section = Section::Preamble;

    for (ln, line) in logical_lines(text) {
        let mut cur = Cursor::new(line, ln);
        match line {
            "signature" => {
                section = Section::Signature;
                continue;
            }
            "precedence" => {
                section = Section::Precedence;
                continue;
            }
            "rules" => {
                section = Section::Rules;
                continue;
            }
            "deduction" => {
                section = Section::Deduction;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble => {
                cur.keyword("theory")?;
                name = cur.ident()?;
                cur.expect_end()?;
            }
            Section::Signature => {
                let col = cur.col();
                let sym = cur.ident()?;
                if sym.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    return Err(ParseError::new(
                        ln,
                        col,
                        format!("symbol `{sym}` must not start with an uppercase letter"),
                    ));
                }
                cur.eat('/')?;
                let dcol = cur.col();
                let digits = {
                    let mut s = String::new();
                    while matches!(cur.chars.get(cur.pos), Some(c) if c.is_ascii_digit()) {
                        s.push(cur.chars[cur.pos]);
                        cur.pos += 1;
                    }
                    s
                };
                let arity: usize = digits
                    .parse()
                    .map_err(|_| ParseError::new(ln, dcol, "expected arity"))?;
                let kind = if cur.at_end() {
                    SymbolKind::Constructor
                } else {
                    cur.keyword("free")?;
                    cur.expect_end()?;
                    if arity != 0 {
                        return Err(ParseError::new(
                            ln,
                            col,
                            format!("free constant `{sym}` must have arity 0"),
                        ));
                    }
                    SymbolKind::FreeConstant
                };
                sig.declare(&sym, arity, kind)
                    .map_err(|e| ParseError::new(ln, col, e.to_string()))?;
            }
            Section::Precedence => {
                let mut names = precedence.take().map(|(_, v)| v).unwrap_or_default();
                while !cur.at_end() {
                    names.push(cur.ident()?);
                }
                precedence = Some((ln, names));
            }
            Section::Rules => {
                let lhs = cur.term(&sig)?;
                cur.eat('-')?;
                cur.eat('>')?;
                let rhs = cur.term(&sig)?;
                cur.expect_end()?;
                let rule = RewriteRule::new(lhs, rhs);
                if !rule.is_wellformed() {
                    return Err(ParseError::new(
                        ln,
                        1,
                        format!("rule `{rule}` has variables in the rhs not bound by the lhs"),
                    ));
                }
                rewrites.push(rule);
            }
            Section::Deduction => {
                let lhs = if cur.peek() == Some('=') {
                    Vec::new()
                } else {
                    cur.term_list(&sig)?
                };
                cur.eat('=')?;
                cur.eat('>')?;
                let rhs = cur.term(&sig)?;
                cur.expect_end()?;
                deduction.push((ln, DeductionRule::new(lhs, rhs)));
            }
        }
    }

    if let Some((ln, names)) = precedence {
        sig.set_precedence(&names)
            .map_err(|e| ParseError::new(ln, 1, e.to_string()))?;
    }

    for rule in &rewrites {
        for sub in rule.lhs.subterms(false).iter().chain(rule.rhs.subterms(false).iter()) {
            if let Term::App(f, _) = sub {
                if sig.get(f).map(|s| s.kind) == Some(SymbolKind::FreeConstant) {
                    return Err(ParseError::new(
                        1,
                        1,
                        format!("free constant `{f}` used in rewrite rule `{rule}`"),
                    ));
                }
            }
        }
    }
    let rewrites = RewriteSystem::new(rewrites, sig.clone());
    rewrites
        .check_oriented()
        .map_err(|e| ParseError::new(1, 1, e.to_string()))?;

    let mut rules = Vec::new();
    for (ln, rule) in deduction {
        if !rule.is_constructor_shape() {
            return Err(ParseError::new(
                ln,
                1,
                format!(
                    "deduction rule `{rule}` is not of the constructor shape \
                     x1,…,xn => f(x1,…,xn)"
                ),
            ));
        }
        rules.push(rule);
    }
    let l0 = DeductionSystem::new(rules, sig.clone(), TheoryTag::ModuloTheory);

    Ok(TheoryBundle {
        name,
        sig,
        rewrites,
        l0,
    })
}

/// Render a bundle in the theory file format; `parse_theory` inverts this.
/// Parse a single term against the bundle's signature.  Uppercase-initial
/// identifiers are variables.
pub fn parse_term(text: &str, b: &TheoryBundle) -> Result<Term, ParseError> {
    let mut cur = Cursor::new(text, 1);
    let t = cur.term(&b.sig)?;
    cur.expect_end()?;
    Ok(t)
}

pub fn serialize_theory(b: &TheoryBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theory {}", b.name);
    let _ = writeln!(out, "signature");
    for sym in b.sig.symbols() {
        let free = if sym.kind == SymbolKind::FreeConstant {
            " free"
        } else {
            ""
        };
        let _ = writeln!(out, "  {}/{}{}", sym.name, sym.arity, free);
    }
    let _ = writeln!(out, "precedence");
    let _ = writeln!(out, "  {}", b.sig.precedence().join(" "));
    let _ = writeln!(out, "rules");
    for rule in &b.rewrites.rules {
        let rule = uppercase_vars_rewrite(rule);
        let _ = writeln!(out, "  {} -> {}", rule.lhs, rule.rhs);
    }
    let _ = writeln!(out, "deduction");
    for rule in &b.l0.rules {
        out.push_str("  ");
        out.push_str(&serialize_deduction_rule(rule));
        out.push('\n');
    }
    out
}

/// One deduction rule in file syntax, variables renamed to `X0, X1, …` so
/// the output always lexes as variables.
pub fn serialize_deduction_rule(rule: &DeductionRule) -> String {
    let rule = uppercase_vars_rule(rule);
    let premises: Vec<String> = rule.lhs.iter().map(Term::to_string).collect();
    if premises.is_empty() {
        format!("=> {}", rule.rhs)
    } else {
        format!("{} => {}", premises.join(", "), rule.rhs)
    }
}

fn uppercase_renaming(vars: impl IntoIterator<Item = String>) -> Substitution {
    let mut ren = Substitution::identity();
    for x in vars {
        if !x.chars().next().is_some_and(|c| c.is_ascii_uppercase()) || x.contains('#') {
            let fresh = format!("X{}", x.to_ascii_uppercase().replace('#', "_"));
            ren.bind(&x, Term::var(&fresh));
        }
    }
    ren
}

fn uppercase_vars_rule(rule: &DeductionRule) -> DeductionRule {
    let ok = |x: &String| {
        x.chars().next().is_some_and(|c| c.is_ascii_uppercase()) && !x.contains('#')
    };
    if rule.vars().iter().all(ok) {
        return rule.clone();
    }
    // Saturation-produced rules carry fresh `#`-suffixed variables: print
    // them through the canonical renaming instead.
    let canon = rule.canonical();
    let ren = uppercase_renaming(canon.vars());
    canon.apply(&ren)
}

fn uppercase_vars_rewrite(rule: &RewriteRule) -> RewriteRule {
    let ren = uppercase_renaming(rule.lhs.vars().into_iter().chain(rule.rhs.vars()));
    RewriteRule::new(rule.lhs.apply(&ren), rule.rhs.apply(&ren))
}

// ---------------------------------------------------------------------------
// Constraint files
// ---------------------------------------------------------------------------

/// Parse a constraint file against a bundle's signature.  The result
/// satisfies `check_wellformed`; violations are reported with the offending
/// constraint's position.
pub fn parse_constraints(text: &str, b: &TheoryBundle) -> Result<ConstraintSystem, ParseError> {
    let mut constraints: Vec<(usize, DeductionConstraint)> = Vec::new();
    let mut eqs: Vec<(Term, Term)> = Vec::new();
    for (ln, line) in logical_lines(text) {
        let mut cur = Cursor::new(line, ln);
        if line.starts_with("knows") {
            cur.keyword("knows")?;
            let knowledge = if cur.peek() == Some(';') {
                Vec::new()
            } else {
                cur.term_list(&b.sig)?
            };
            cur.eat(';')?;
            cur.keyword("deduce")?;
            let goal = cur.term(&b.sig)?;
            cur.expect_end()?;
            constraints.push((ln, DeductionConstraint::new(knowledge, goal)));
        } else if line.starts_with("eq") {
            cur.keyword("eq")?;
            let lhs = cur.term(&b.sig)?;
            cur.eat('=')?;
            let rhs = cur.term(&b.sig)?;
            cur.expect_end()?;
            eqs.push((lhs, rhs));
        } else {
            return Err(ParseError::new(
                ln,
                1,
                "expected a `knows …; deduce …` or `eq … = …` line",
            ));
        }
    }
    let system = ConstraintSystem::new(
        constraints.iter().map(|(_, c)| c.clone()).collect(),
        UnificationSystem::new(eqs),
    );
    if !check_wellformed(&system) {
        // Locate the first offending constraint for the diagnostic.
        for i in 0..constraints.len() {
            let prefix = ConstraintSystem::new(
                constraints[..=i].iter().map(|(_, c)| c.clone()).collect(),
                UnificationSystem::default(),
            );
            if !check_wellformed(&prefix) {
                let (ln, c) = &constraints[i];
                return Err(ParseError::new(
                    *ln,
                    1,
                    format!(
                        "constraint {} (`{c}`) violates well-formedness: knowledge must \
                         grow monotonically and only use variables bound by earlier goals",
                        i + 1
                    ),
                ));
            }
        }
    }
    Ok(system)
}

/// Render a constraint system in the constraint file format.
pub fn serialize_constraints(c: &ConstraintSystem) -> String {
    let mut out = String::new();
    for dc in &c.constraints {
        let knowledge: Vec<String> = dc.knowledge.iter().map(Term::to_string).collect();
        let _ = writeln!(out, "knows {}; deduce {}", knowledge.join(", "), dc.goal);
    }
    for (l, r) in &c.unif.equations {
        let _ = writeln!(out, "eq {l} = {r}");
    }
    out
}
