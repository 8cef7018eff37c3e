//! fusionlab: a desk-scale workbench for unions of first-order theories
//! over a shared reduct.
//!
//! The library makes the finite content of that setting executable:
//!
//! - [`logic`] — multi-sorted signatures, formulas, a textual parser,
//!   and language families with a common intersection;
//! - [`normal`] — flat literals, E♭ disjunctions, flat diagrams,
//!   Morleyization, and bounded-witness checking;
//! - [`structure`] — finite structures, evaluation, enumeration up to
//!   isomorphism, embeddings, and automorphisms;
//! - [`fraisse`] — amalgamation certification, free amalgams, generic
//!   model construction, Fraïssé expansions, and joint-type realization;
//! - [`closure`] — closure-operator fixpoints, bcl, acl triviality
//!   testing, and ternary independence relations with axiom checkers;
//! - [`interp`] — encode/decode pairs between classes of structures,
//!   with round-trip verification, and the E₁∧E₂ graph reduct;
//! - [`cli`] — the `fusionlab` command-line front end, file formats,
//!   and packaged suites.
//!
//! Everything is verified up to explicit finite size bounds; the
//! workbench never claims theory-level facts. See the `examples/`
//! directory for one runnable example per capability.

pub mod catalog;
pub mod class;
pub mod cli;
pub mod closure;
pub mod fraisse;
pub mod interp;
pub mod logic;
pub mod normal;
pub mod solver;
pub mod structure;

pub use class::ClassSpec;
pub use logic::{make_language_family, parse_formula, Formula, Language, LanguageFamily, Term, Var};
pub use solver::Budget;
pub use structure::{evaluate, FiniteStructure};
