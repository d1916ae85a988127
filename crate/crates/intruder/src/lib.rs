//! Saturation-based decision procedures for intruder deduction modulo
//! equational theories given by convergent rewrite systems with the finite
//! variant property.
//!
//! The crate provides, bottom up:
//!
//! * [`term`] — terms, signatures, substitutions;
//! * [`order`] — a ground-total lexicographic path ordering and the
//!   increasing/decreasing rule classification;
//! * [`rewrite`] — normalization and convergence diagnostics;
//! * [`unify`] — syntactic unification and matching;
//! * [`variants`] — finite variants via basic narrowing;
//! * [`rules`] / [`saturate`] — deduction systems and their saturation;
//! * [`constraints`] — reachability constraint solving and ground decision;
//! * [`contracting`] — the δ/μ measures and the contracting criterion;
//! * [`subterm`] — the specialized solver for subterm convergent theories;
//! * [`theory`] — built-in theories, text formats and parsers.

pub mod constraints;
pub mod contracting;
pub mod order;
pub mod rewrite;
pub mod rules;
pub mod saturate;
pub mod subterm;
pub mod term;
pub mod theory;
pub mod unify;
pub mod variants;
