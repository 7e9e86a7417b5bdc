//! Decision procedures for preferential conditional logics.
//!
//! The crate implements a family of fifteen conditional logics over
//! neighbourhood semantics: a base system and its extensions by normality,
//! total reflexivity, weak centering, centering, uniformity, and
//! absoluteness. For each logic it provides
//!
//! - backward proof search over a labelled sequent calculus that either
//!   returns a checkable derivation or, for logics without absoluteness, a
//!   finite countermodel extracted from a saturated branch,
//! - an independent derivation checker,
//! - a semantic evaluator for neighbourhood models, together with frame
//!   checking and a brute-force countermodel enumerator used as an oracle.
//!
//! Entry points: [`formula::parse_formula`], [`calculus::Logic`],
//! [`search::prove`], [`countermodel::extract_model`], and
//! [`semantics::NeighbourhoodModel`].

pub mod calculus;
pub mod countermodel;
pub mod formula;
pub mod label;
pub mod search;
pub mod semantics;
pub mod sequent;
