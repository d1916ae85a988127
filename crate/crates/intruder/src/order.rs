//! The reduction order: a lexicographic path ordering over the signature's
//! total precedence, and the increasing/decreasing classification of
//! deduction rules it induces.
//!
//! The LPO is a reduction order that is total on ground terms, closed under
//! substitution and compatible with contexts, and it has the subterm
//! property, so destructor rules such as `dec(enc(x,y),y) -> x` orient
//! left-to-right.

use serde::{Deserialize, Serialize};

use crate::rules::DeductionRule;
use crate::term::{Signature, SignatureError, Term};

/// Outcome of comparing two terms under a strict partial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderResult {
    Greater,
    Less,
    Equal,
    Incomparable,
}

/// Increasing/decreasing status of a deduction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleClass {
    Increasing,
    Decreasing,
}

/// Compare `s` and `t` under the LPO induced by `sig`'s precedence.
pub fn lpo_compare(s: &Term, t: &Term, sig: &Signature) -> Result<OrderResult, SignatureError> {
    sig.check_term(s)?;
    sig.check_term(t)?;
    Ok(if s == t {
        OrderResult::Equal
    } else if lpo_gt(s, t, sig) {
        OrderResult::Greater
    } else if lpo_gt(t, s, sig) {
        OrderResult::Less
    } else {
        OrderResult::Incomparable
    })
}

/// `s ≻ t` in the LPO.  Symbols are assumed declared (checked by the public
/// entry points).
fn lpo_gt(s: &Term, t: &Term, sig: &Signature) -> bool {
    match (s, t) {
        (_, _) if s == t => false,
        // A term is greater than a variable iff the variable occurs in it.
        (_, Term::Var(x)) => s.vars().contains(x),
        (Term::Var(_), _) => false,
        (Term::App(f, ss), Term::App(g, ts)) => {
            // LPO1: some argument of s dominates t.
            if ss.iter().any(|si| si == t || lpo_gt(si, t, sig)) {
                return true;
            }
            let rf = sig.rank(f).expect("declared symbol");
            let rg = sig.rank(g).expect("declared symbol");
            if rf > rg {
                // LPO2: head of s is larger; s must dominate every argument
                // of t.
                ts.iter().all(|tj| lpo_gt(s, tj, sig))
            } else if rf == rg {
                // LPO3: equal heads; first differing arguments decide,
                // and s must dominate the remaining arguments of t.
                debug_assert_eq!(ss.len(), ts.len());
                match ss.iter().zip(ts).find(|(a, b)| a != b) {
                    None => false,
                    Some((si, ti)) => {
                        lpo_gt(si, ti, sig) && ts.iter().all(|tj| lpo_gt(s, tj, sig))
                    }
                }
            } else {
                false
            }
        }
    }
}

/// A rule is decreasing when some premise is ⪰ the conclusion, increasing
/// otherwise.
pub fn classify(rule: &DeductionRule, sig: &Signature) -> Result<RuleClass, SignatureError> {
    for s in &rule.lhs {
        match lpo_compare(s, &rule.rhs, sig)? {
            OrderResult::Greater | OrderResult::Equal => return Ok(RuleClass::Decreasing),
            _ => {}
        }
    }
    Ok(RuleClass::Increasing)
}
