//! Reachability constraint systems and their resolution.
//!
//! A constraint system is an ordered list of deduction constraints `E ⊳ v`
//! (knowledge sets grow monotonically, every knowledge variable is bound by
//! an earlier goal) plus a unification system.  `prepare` eliminates the
//! equational theory by guessing a finite variant substitution for the
//! tuple of all terms and solving the residual equations syntactically.
//! `solve` then applies the three transformation rules — Unif, Reduce 1
//! (increasing rules) and Reduce 2 (decreasing rules, which augment later
//! knowledge) — at the leftmost unsolved constraint under depth-first
//! backtracking.  `decide_ground` is the budget-free memoized variant for
//! ground systems, and `oracle_closure` / `oracle_derivable` are the
//! brute-force oracles the test-suite checks everything against.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::order::{classify, RuleClass};
use crate::rewrite::{normalize, RewriteSystem, DEFAULT_STEP_BUDGET};
use crate::rules::DeductionSystem;
use crate::term::{count_vars, vars_of, Substitution, Term};
use crate::unify::{mgu, UnificationSystem};
use crate::variants::{variants_tuple, VariantError};

/// Marks constraints that the subterm-convergent solver restricts to
/// increasing rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintTag {
    Plain,
    Inc,
}

/// A single deduction constraint: from the knowledge `E`, deduce the goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductionConstraint {
    pub knowledge: BTreeSet<Term>,
    pub goal: Term,
    pub tag: ConstraintTag,
}

impl DeductionConstraint {
    pub fn new(knowledge: impl IntoIterator<Item = Term>, goal: Term) -> Self {
        DeductionConstraint {
            knowledge: knowledge.into_iter().collect(),
            goal,
            tag: ConstraintTag::Plain,
        }
    }

    /// Non-variable knowledge members (E ∖ 𝒳), the only ones the
    /// transformation rules consult.
    pub fn usable_knowledge(&self) -> impl Iterator<Item = &Term> {
        self.knowledge.iter().filter(|t| !t.is_var())
    }

    pub fn apply(&self, sigma: &Substitution) -> DeductionConstraint {
        DeductionConstraint {
            knowledge: self.knowledge.iter().map(|t| t.apply(sigma)).collect(),
            goal: self.goal.apply(sigma),
            tag: self.tag,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.goal.is_var()
    }
}

impl fmt::Display for DeductionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, t) in self.knowledge.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t}")?;
        }
        let arrow = match self.tag {
            ConstraintTag::Plain => "|>",
            ConstraintTag::Inc => "|>inc",
        };
        write!(f, "}} {arrow} {}", self.goal)
    }
}

/// An ordered constraint system with a residual unification part.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub constraints: Vec<DeductionConstraint>,
    pub unif: UnificationSystem,
}

impl ConstraintSystem {
    pub fn new(constraints: Vec<DeductionConstraint>, unif: UnificationSystem) -> Self {
        ConstraintSystem { constraints, unif }
    }

    pub fn apply(&self, sigma: &Substitution) -> ConstraintSystem {
        ConstraintSystem {
            constraints: self.constraints.iter().map(|c| c.apply(sigma)).collect(),
            unif: self.unif.apply(sigma),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut vs = self.unif.vars();
        for c in &self.constraints {
            vs.extend(vars_of(c.knowledge.iter()));
            vs.extend(c.goal.vars());
        }
        vs
    }

    /// All terms of the system in a fixed order: knowledge sets and goals
    /// first, then both sides of every equation.
    pub fn all_terms(&self) -> Vec<Term> {
        let mut ts = Vec::new();
        for c in &self.constraints {
            ts.extend(c.knowledge.iter().cloned());
            ts.push(c.goal.clone());
        }
        for (l, r) in &self.unif.equations {
            ts.push(l.clone());
            ts.push(r.clone());
        }
        ts
    }

    pub fn is_solved_form(&self) -> bool {
        self.unif.is_empty() && self.constraints.iter().all(DeductionConstraint::is_solved)
    }
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        if !self.unif.is_empty() {
            writeln!(f, "{}", self.unif)?;
        }
        Ok(())
    }
}

/// A ground constraint system: knowledge and goals ground and normal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundConstraintSystem {
    pub constraints: Vec<(BTreeSet<Term>, Term)>,
}

/// Verdict for ground reachability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroundVerdict {
    Val,
    Inval,
}

/// Outcome of constraint solving.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveOutcome {
    Sat(Substitution),
    Fail,
    Unknown(String),
}

/// Counters exposed for the property suites.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Branch nodes explored.
    pub nodes: usize,
    /// Transformation applications whose variable accounting violated the
    /// contracting trichotomy (variable set unchanged without
    /// instantiation, or strictly fewer variables).
    pub trichotomy_violations: usize,
    /// Transformation applications total.
    pub steps: usize,
}

/// Both invariants of the constraint-system definition: knowledge
/// monotonicity and variable origination.
pub fn check_wellformed(c: &ConstraintSystem) -> bool {
    let mut bound: BTreeSet<String> = BTreeSet::new();
    let mut prev: Option<&BTreeSet<Term>> = None;
    for dc in &c.constraints {
        if let Some(p) = prev {
            if !p.is_subset(&dc.knowledge) {
                return false;
            }
        }
        if !vars_of(dc.knowledge.iter()).is_subset(&bound) {
            return false;
        }
        bound.extend(dc.goal.vars());
        prev = Some(&dc.knowledge);
    }
    true
}

/// Step 1 of the solving algorithm: guess a variant substitution of the
/// tuple of all terms, normalize, and solve the residual equations.  Each
/// output has an empty unification part.
pub fn prepare(
    c0: &ConstraintSystem,
    r: &RewriteSystem,
    variant_depth: usize,
) -> Result<Vec<ConstraintSystem>, VariantError> {
    Ok(prepare_with_subst(c0, r, variant_depth)?
        .into_iter()
        .map(|(_, sys)| sys)
        .collect())
}

/// [`prepare`], additionally reporting the substitution each branch applied
/// to the original system (variant guess composed with the equation mgu,
/// restricted to the original variables).
pub fn prepare_with_subst(
    c0: &ConstraintSystem,
    r: &RewriteSystem,
    variant_depth: usize,
) -> Result<Vec<(Substitution, ConstraintSystem)>, VariantError> {
    let terms = c0.all_terms();
    let original_vars = c0.vars();
    let mut out: Vec<(Substitution, ConstraintSystem)> = Vec::new();
    for (theta, reducts) in variants_tuple(&terms, r, variant_depth)? {
        // Unpack the reducts following the construction order of
        // `all_terms`.
        let mut idx = 0usize;
        let mut take = |n: usize| {
            let slice = reducts[idx..idx + n].to_vec();
            idx += n;
            slice
        };
        let mut constraints = Vec::with_capacity(c0.constraints.len());
        for c in &c0.constraints {
            let know = take(c.knowledge.len());
            let goal = take(1).pop().expect("goal reduct");
            let mut dc = DeductionConstraint::new(know, goal);
            dc.tag = c.tag;
            constraints.push(dc);
        }
        let mut eqs = Vec::new();
        for _ in &c0.unif.equations {
            let l = take(1).pop().expect("lhs reduct");
            let rr = take(1).pop().expect("rhs reduct");
            eqs.push((l, rr));
        }
        let Ok(mu) = mgu(&UnificationSystem::new(eqs)) else {
            continue;
        };
        let sys = ConstraintSystem::new(
            constraints.iter().map(|c| c.apply(&mu)).collect(),
            UnificationSystem::default(),
        );
        if !out.iter().any(|(_, s)| *s == sys) {
            let applied = theta.compose(&mu).restrict(&original_vars);
            out.push((applied, sys));
        }
    }
    Ok(out)
}

/// Enumerate all ways to map the listed premises to usable knowledge
/// elements.
pub(crate) fn premise_assignments<'a>(
    premises: &[&Term],
    knowledge: &'a [&'a Term],
) -> Vec<Vec<&'a Term>> {
    let mut out = vec![Vec::new()];
    for _ in premises {
        let mut next = Vec::new();
        for partial in &out {
            for e in knowledge {
                let mut p = partial.clone();
                p.push(*e);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// One applicable transformation: the successor system and the unifier the
/// step applied.  Reduce 2 steps carry the (knowledge, conclusion) pair
/// they attempt, for cycle detection.
struct StepResult {
    system: ConstraintSystem,
    sigma: Substitution,
    guard: Option<(BTreeSet<Term>, Term)>,
}

/// All successor systems of the constraint at `pos` (which must have a
/// non-variable goal) under Unif, Reduce 1 and Reduce 2.
fn successors(c: &ConstraintSystem, pos: usize, l: &DeductionSystem) -> Vec<StepResult> {
    let mut out = Vec::new();
    let dc = &c.constraints[pos];
    let knowledge: Vec<&Term> = dc.usable_knowledge().collect();
    let goal = &dc.goal;

    // Unif: the goal is unified with a non-variable knowledge member.
    for u in &knowledge {
        if let Ok(sigma) = crate::unify::mgu_terms(u, goal) {
            let mut rest = c.clone();
            rest.constraints.remove(pos);
            out.push(StepResult {
                system: rest.apply(&sigma),
                sigma,
                guard: None,
            });
        }
    }

    for rule in &l.rules {
        let Ok(class) = classify(rule, &l.sig) else {
            continue;
        };
        let rule = rule.rename_apart();
        let nonvar: Vec<&Term> = rule.nonvar_premises().collect();
        let var_premises: Vec<&Term> = rule.var_premises().collect();
        for assignment in premise_assignments(&nonvar, &knowledge) {
            let mut eqs: Vec<(Term, Term)> = nonvar
                .iter()
                .zip(&assignment)
                .map(|(li, ei)| ((*li).clone(), (*ei).clone()))
                .collect();
            if class == RuleClass::Increasing {
                // Reduce 1: additionally unify the conclusion with the
                // goal; the constraint is replaced by one subgoal per
                // variable premise.
                eqs.push((rule.rhs.clone(), goal.clone()));
                let Ok(sigma) = mgu(&UnificationSystem::new(eqs)) else {
                    continue;
                };
                let mut sys = c.clone();
                sys.constraints.remove(pos);
                for (k, y) in var_premises.iter().enumerate() {
                    sys.constraints.insert(
                        pos + k,
                        DeductionConstraint {
                            knowledge: dc.knowledge.clone(),
                            goal: (*y).clone(),
                            tag: ConstraintTag::Plain,
                        },
                    );
                }
                out.push(StepResult {
                    system: sys.apply(&sigma),
                    sigma,
                    guard: None,
                });
            } else {
                // Reduce 2: apply the decreasing rule and add its
                // (instantiated) conclusion to this and all later
                // knowledge sets.
                let Ok(sigma) = mgu(&UnificationSystem::new(eqs)) else {
                    continue;
                };
                let r_inst = rule.rhs.apply(&sigma);
                // Re-deriving a term already present makes no progress, and
                // a variable conclusion instance is vacuous (the conclusion
                // is one of the rule's own variable premises).
                if r_inst.is_var() || dc.knowledge.contains(&r_inst) {
                    continue;
                }
                let mut sys = c.clone();
                for (k, y) in var_premises.iter().enumerate() {
                    sys.constraints.insert(
                        pos + k,
                        DeductionConstraint {
                            knowledge: dc.knowledge.clone(),
                            goal: (*y).clone(),
                            tag: ConstraintTag::Plain,
                        },
                    );
                }
                for later in sys.constraints.iter_mut().skip(pos + var_premises.len()) {
                    later.knowledge.insert(r_inst.clone());
                }
                out.push(StepResult {
                    system: sys.apply(&sigma),
                    sigma,
                    guard: Some((dc.knowledge.clone(), r_inst)),
                });
            }
        }
    }
    out
}

/// Default budget (branch nodes) for `solve`.
pub const DEFAULT_SOLVE_BUDGET: usize = 10_000;

/// Solve a prepared (empty-theory) constraint system against a saturated
/// deduction system.  Returns a verified witness on success.
pub fn solve(c: &ConstraintSystem, l: &DeductionSystem, budget: usize) -> SolveOutcome {
    solve_with_stats(c, l, budget).0
}

/// `solve`, additionally reporting search statistics.
pub fn solve_with_stats(
    c: &ConstraintSystem,
    l: &DeductionSystem,
    budget: usize,
) -> (SolveOutcome, SolveStats) {
    let mut stats = SolveStats::default();
    let original_vars = c.vars();
    let mut visiting = BTreeSet::new();
    let outcome = dfs(c, l, Substitution::identity(), budget, &mut stats, &mut visiting);
    let outcome = match outcome {
        Dfs::Sat(acc, solved) => {
            match witness_from_solved_form(&solved, &acc, &original_vars, l) {
                Some(w) if verify_witness(c, &w, l) => SolveOutcome::Sat(w),
                Some(_) | None => SolveOutcome::Unknown(
                    "solved form reached but witness verification failed".into(),
                ),
            }
        }
        Dfs::Fail => SolveOutcome::Fail,
        Dfs::Exhausted(diag) => SolveOutcome::Unknown(diag),
    };
    (outcome, stats)
}

enum Dfs {
    /// Accumulated substitution and the solved form reached.
    Sat(Substitution, ConstraintSystem),
    Fail,
    Exhausted(String),
}

fn dfs(
    c: &ConstraintSystem,
    l: &DeductionSystem,
    acc: Substitution,
    budget: usize,
    stats: &mut SolveStats,
    visiting: &mut BTreeSet<(BTreeSet<Term>, Term)>,
) -> Dfs {
    stats.nodes += 1;
    if stats.nodes > budget {
        return Dfs::Exhausted(format!(
            "budget of {budget} branch nodes exhausted; open system:\n{c}"
        ));
    }
    // Leftmost unsolved constraint.
    let Some(pos) = c.constraints.iter().position(|dc| !dc.is_solved()) else {
        return Dfs::Sat(acc, c.clone());
    };
    let before_vars = count_vars(c.all_terms().iter());
    let mut exhausted: Option<String> = None;
    for step in successors(c, pos, l) {
        stats.steps += 1;
        // Variable accounting (the contracting trichotomy): the step
        // either leaves the system's variables untouched or strictly
        // decreases their number.
        let after_vars = count_vars(step.system.all_terms().iter());
        let instantiates = c
            .vars()
            .iter()
            .any(|x| !Term::Var(x.clone()).apply(&step.sigma).is_var());
        if !(after_vars < before_vars || (after_vars == before_vars && !instantiates)) {
            stats.trichotomy_violations += 1;
        }
        // Re-attempting the same decreasing conclusion from the same
        // knowledge inside its own justification is circular: a minimal
        // derivation of the conclusion does not use itself.
        if let Some(guard) = &step.guard {
            if !visiting.insert(guard.clone()) {
                continue;
            }
        }
        let sub = dfs(&step.system, l, acc.compose(&step.sigma), budget, stats, visiting);
        if let Some(guard) = &step.guard {
            visiting.remove(guard);
        }
        match sub {
            Dfs::Sat(s, f) => return Dfs::Sat(s, f),
            Dfs::Fail => {}
            Dfs::Exhausted(d) => exhausted = Some(d),
        }
    }
    match exhausted {
        Some(d) => Dfs::Exhausted(d),
        None => Dfs::Fail,
    }
}

/// Bind every residual goal variable of a solved form to a deducible ground
/// term: the smallest knowledge member that is ground, falling back to a
/// nullary-rule conclusion or a single constructor application.
pub(crate) fn witness_from_solved_form(
    solved: &ConstraintSystem,
    acc: &Substitution,
    original_vars: &BTreeSet<String>,
    l: &DeductionSystem,
) -> Option<Substitution> {
    let mut extra = Substitution::identity();
    for dc in &solved.constraints {
        let dc = dc.apply(&extra);
        let Term::Var(x) = &dc.goal else {
            // Already ground via an earlier binding: leave it to the
            // verification pass.
            continue;
        };
        let mut candidates: Vec<Term> = dc
            .knowledge
            .iter()
            .filter(|t| t.is_ground())
            .cloned()
            .collect();
        // Conclusions of premise-free rules are always available.
        candidates.extend(
            l.rules
                .iter()
                .filter(|r| r.lhs.is_empty() && r.rhs.is_ground())
                .map(|r| r.rhs.clone()),
        );
        // One constructor application over ground knowledge.
        if candidates.is_empty() {
            for rule in &l.rules {
                if !rule.is_constructor_shape() {
                    continue;
                }
                let ground: Vec<&Term> =
                    dc.knowledge.iter().filter(|t| t.is_ground()).collect();
                if let Some(e) = ground.first() {
                    let mut sigma = Substitution::identity();
                    for v in rule.vars() {
                        sigma.bind(&v, (*e).clone());
                    }
                    candidates.push(rule.rhs.apply(&sigma));
                }
            }
        }
        candidates.sort_by_key(|t| (t.size(), t.clone()));
        let chosen = candidates.into_iter().next()?;
        extra.bind(x, chosen);
    }
    let full = acc.compose(&extra);
    let mut out = Substitution::identity();
    for x in original_vars {
        let img = Term::Var(x.clone()).apply(&full);
        out.bind(x, img);
    }
    Some(out)
}

/// Replay a witness against the system: every instantiated goal must be
/// derivable from its instantiated knowledge set.
pub fn verify_witness(c: &ConstraintSystem, w: &Substitution, l: &DeductionSystem) -> bool {
    let inst = c.apply(w);
    if !inst.unif.equations.iter().all(|(a, b)| a == b) {
        return false;
    }
    for dc in &inst.constraints {
        if !dc.goal.is_ground() || dc.knowledge.iter().any(|t| !t.is_ground()) {
            return false;
        }
        if !oracle_derivable(&dc.knowledge, &dc.goal, l, ORACLE_DEFAULT_DEPTH) {
            return false;
        }
    }
    true
}

/// Depth used for witness verification and oracle agreement checks.
pub const ORACLE_DEFAULT_DEPTH: usize = 6;

/// Decide a ground reachability problem by memoized exhaustive search.
pub fn decide_ground(g: &GroundConstraintSystem, l: &DeductionSystem) -> GroundVerdict {
    let mut memo: BTreeMap<(Vec<Term>, Term), bool> = BTreeMap::new();
    for (e, t) in &g.constraints {
        let mut visiting = BTreeSet::new();
        if !ground_derivable(e, t, l, &mut memo, &mut visiting) {
            return GroundVerdict::Inval;
        }
    }
    GroundVerdict::Val
}

fn state_key(e: &BTreeSet<Term>, t: &Term) -> (Vec<Term>, Term) {
    (e.iter().cloned().collect(), t.clone())
}

fn ground_derivable(
    e: &BTreeSet<Term>,
    t: &Term,
    l: &DeductionSystem,
    memo: &mut BTreeMap<(Vec<Term>, Term), bool>,
    visiting: &mut BTreeSet<(Vec<Term>, Term)>,
) -> bool {
    // Unif specialised to ground terms: membership.
    if e.contains(t) {
        return true;
    }
    let key = state_key(e, t);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    if !visiting.insert(key.clone()) {
        // Cycle: this state is already under exploration on the current
        // path; revisiting it cannot contribute a shorter derivation.
        return false;
    }
    let usable: Vec<&Term> = e.iter().filter(|u| !u.is_var()).collect();
    let mut result = false;
    'search: for rule in &l.rules {
        let Ok(class) = classify(rule, &l.sig) else {
            continue;
        };
        let rule = rule.rename_apart();
        let nonvar: Vec<&Term> = rule.nonvar_premises().collect();
        let var_premises: Vec<&Term> = rule.var_premises().collect();
        for assignment in premise_assignments(&nonvar, &usable) {
            let mut eqs: Vec<(Term, Term)> = nonvar
                .iter()
                .zip(&assignment)
                .map(|(li, ei)| ((*li).clone(), (*ei).clone()))
                .collect();
            match class {
                RuleClass::Increasing => {
                    // Reduce 1: conclusion must be the goal.
                    eqs.push((rule.rhs.clone(), t.clone()));
                    let Ok(sigma) = mgu(&UnificationSystem::new(eqs)) else {
                        continue;
                    };
                    let ok = var_premises.iter().all(|y| {
                        let sub = y.apply(&sigma);
                        // A still-free variable premise is a solved-form
                        // constraint: satisfiable by any knowledge element.
                        !sub.is_ground() || ground_derivable(e, &sub, l, memo, visiting)
                    });
                    if ok {
                        result = true;
                        break 'search;
                    }
                }
                RuleClass::Decreasing => {
                    // Reduce 2: derive the conclusion instance and retry
                    // the goal with augmented knowledge.
                    let Ok(sigma) = mgu(&UnificationSystem::new(eqs)) else {
                        continue;
                    };
                    let r_inst = rule.rhs.apply(&sigma);
                    if !r_inst.is_ground() || e.contains(&r_inst) {
                        continue;
                    }
                    let ok_premises = var_premises.iter().all(|y| {
                        let sub = y.apply(&sigma);
                        !sub.is_ground() || ground_derivable(e, &sub, l, memo, visiting)
                    });
                    if !ok_premises {
                        continue;
                    }
                    let mut e2 = e.clone();
                    e2.insert(r_inst);
                    if ground_derivable(&e2, t, l, memo, visiting) {
                        result = true;
                        break 'search;
                    }
                }
            }
        }
    }
    visiting.remove(&key);
    if result {
        // Only successes are cached globally; failures can depend on the
        // path through the cycle check.
        memo.insert(key, true);
    }
    result
}

/// Bounded brute-force closure: all ground terms derivable from `E` with a
/// derivation of height at most `depth`.
pub fn oracle_closure(e: &BTreeSet<Term>, l: &DeductionSystem, depth: usize) -> BTreeSet<Term> {
    let mut known = e.clone();
    for _ in 0..depth {
        let mut new_terms: BTreeSet<Term> = BTreeSet::new();
        let usable: Vec<&Term> = known.iter().collect();
        for rule in &l.rules {
            let rule = rule.rename_apart();
            let nonvar: Vec<&Term> = rule.nonvar_premises().collect();
            for assignment in premise_assignments(&nonvar, &usable) {
                let pairs: Vec<(&Term, &Term)> =
                    nonvar.iter().copied().zip(assignment).collect();
                let Some(sigma) = crate::unify::match_terms(&pairs) else {
                    continue;
                };
                // Instantiate the remaining variables (the variable
                // premises) with every known term.
                let open: Vec<String> = rule
                    .vars()
                    .into_iter()
                    .filter(|x| sigma.lookup(x).is_none())
                    .collect();
                for combo in premise_assignments(
                    &open.iter().map(|_| &rule.rhs).collect::<Vec<_>>(),
                    &usable,
                ) {
                    let mut full = sigma.clone();
                    for (x, v) in open.iter().zip(combo) {
                        full.bind(x, v.clone());
                    }
                    let conclusion = rule.rhs.apply(&full);
                    if conclusion.is_ground() {
                        new_terms.insert(conclusion);
                    }
                }
            }
        }
        let before = known.len();
        known.extend(new_terms);
        if known.len() == before {
            break;
        }
    }
    known
}

/// Cap on the decreasing-closure base used by the goal-directed oracle.
const ORACLE_BASE_CAP: usize = 4096;

/// Goal-directed derivability oracle for saturated systems.
///
/// Phase one closes the knowledge under decreasing rules (for a saturated
/// system, well-formed derivations only ever feed decreasing rules from
/// initial knowledge or earlier decreasing steps).  Phase two searches
/// backward through increasing rules down to that base.
pub fn oracle_derivable(
    e: &BTreeSet<Term>,
    goal: &Term,
    l: &DeductionSystem,
    depth: usize,
) -> bool {
    let base = decreasing_closure(e, l, depth);
    let mut memo: BTreeMap<Term, bool> = BTreeMap::new();
    buildable(goal, &base, l, depth, &mut memo)
}

fn decreasing_closure(e: &BTreeSet<Term>, l: &DeductionSystem, depth: usize) -> BTreeSet<Term> {
    let mut base = e.clone();
    // Premise-free rules seed the base.
    for rule in &l.rules {
        if rule.lhs.is_empty() && rule.rhs.is_ground() {
            base.insert(rule.rhs.clone());
        }
    }
    for _ in 0..depth {
        let mut fresh: BTreeSet<Term> = BTreeSet::new();
        let usable: Vec<&Term> = base.iter().filter(|t| !t.is_var()).collect();
        for rule in &l.rules {
            if classify(rule, &l.sig).ok() != Some(RuleClass::Decreasing) {
                continue;
            }
            let rule = rule.rename_apart();
            let nonvar: Vec<&Term> = rule.nonvar_premises().collect();
            for assignment in premise_assignments(&nonvar, &usable) {
                let pairs: Vec<(&Term, &Term)> =
                    nonvar.iter().copied().zip(assignment).collect();
                let Some(sigma) = crate::unify::match_terms(&pairs) else {
                    continue;
                };
                let conclusion = rule.rhs.apply(&sigma);
                if !conclusion.is_ground() || base.contains(&conclusion) {
                    continue;
                }
                // Variable premises bound by the non-variable match must
                // already be derivable; unconstrained ones can take any
                // base element.
                let premises_met = rule.var_premises().all(|y| {
                    let v = y.apply(&sigma);
                    !v.is_ground() || base.contains(&v)
                });
                if premises_met {
                    fresh.insert(conclusion);
                }
            }
        }
        if fresh.is_empty() || base.len() + fresh.len() > ORACLE_BASE_CAP {
            base.extend(fresh);
            break;
        }
        base.extend(fresh);
    }
    base
}

fn buildable(
    goal: &Term,
    base: &BTreeSet<Term>,
    l: &DeductionSystem,
    depth: usize,
    memo: &mut BTreeMap<Term, bool>,
) -> bool {
    if base.contains(goal) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    if let Some(&v) = memo.get(goal) {
        return v;
    }
    let mut ok = false;
    'rules: for rule in &l.rules {
        if classify(rule, &l.sig).ok() != Some(RuleClass::Increasing) {
            continue;
        }
        let rule = rule.rename_apart();
        let Some(sigma) = crate::unify::match_term(&rule.rhs, goal) else {
            continue;
        };
        let premises: Vec<Term> = rule.lhs.iter().map(|p| p.apply(&sigma)).collect();
        let candidates: Vec<&Term> = base.iter().collect();
        if premise_goals_met(&premises, base, l, depth - 1, memo, &candidates) {
            ok = true;
            break 'rules;
        }
    }
    memo.insert(goal.clone(), ok);
    ok
}

fn premise_goals_met(
    premises: &[Term],
    base: &BTreeSet<Term>,
    l: &DeductionSystem,
    depth: usize,
    memo: &mut BTreeMap<Term, bool>,
    candidates: &[&Term],
) -> bool {
    match premises.split_first() {
        None => true,
        Some((p, rest)) => {
            if p.is_ground() {
                return buildable(p, base, l, depth, memo)
                    && premise_goals_met(rest, base, l, depth, memo, candidates);
            }
            // Open premise variables range over the derivable base.
            for c in candidates {
                let Some(sigma) = crate::unify::match_term(p, c) else {
                    continue;
                };
                let rest: Vec<Term> = rest.iter().map(|t| t.apply(&sigma)).collect();
                if premise_goals_met(&rest, base, l, depth, memo, candidates) {
                    return true;
                }
            }
            false
        }
    }
}

/// Convenience pipeline: prepare with the theory, then solve every branch.
pub fn solve_modulo(
    c0: &ConstraintSystem,
    r: &RewriteSystem,
    l: &DeductionSystem,
    variant_depth: usize,
    budget: usize,
) -> Result<SolveOutcome, VariantError> {
    let mut saw_unknown: Option<String> = None;
    let original_vars = c0.vars();
    for (applied, branch) in prepare_with_subst(c0, r, variant_depth)? {
        match solve(&branch, l, budget) {
            SolveOutcome::Sat(w) => {
                // Compose the branch substitution with the branch witness
                // and normalize the images: the result solves the original
                // system modulo the theory.
                let full = applied.compose(&w).restrict(&original_vars);
                let normalized = full
                    .map_images(|t| normalize(t, r, DEFAULT_STEP_BUDGET).unwrap_or_else(|_| t.clone()));
                return Ok(SolveOutcome::Sat(normalized));
            }
            SolveOutcome::Fail => {}
            SolveOutcome::Unknown(d) => saw_unknown = Some(d),
        }
    }
    Ok(match saw_unknown {
        Some(d) => SolveOutcome::Unknown(d),
        None => SolveOutcome::Fail,
    })
}
