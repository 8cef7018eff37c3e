//! Universal classes of finite structures: a language, universal
//! axioms, and optional forbidden configurations.

use crate::logic::{Formula, Language};
use crate::structure::{find_embeddings, holds_sentence, EvalError, FiniteStructure};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassError {
    #[error("axiom `{0}` is not universal (forall-prefix over a quantifier-free body)")]
    NotUniversal(String),
    #[error("axiom mentions symbols outside the class language: `{0}`")]
    ForeignSymbol(String),
    #[error("forbidden configuration {0} is not over the class language")]
    BadForbidden(usize),
}

/// Why a structure fails class membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Axiom(Formula),
    Forbidden(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Axiom(a) => write!(f, "axiom `{a}`"),
            Violation::Forbidden(i) => write!(f, "forbidden configuration #{i}"),
        }
    }
}

/// A universal class: all finite structures over `language` satisfying
/// every axiom and embedding no forbidden configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    name: String,
    language: Language,
    axioms: Vec<Formula>,
    forbidden: Vec<FiniteStructure>,
}

impl ClassSpec {
    pub fn new(
        name: impl Into<String>,
        language: Language,
        axioms: Vec<Formula>,
        forbidden: Vec<FiniteStructure>,
    ) -> Result<Self, ClassError> {
        for a in &axioms {
            if !a.is_universal() {
                return Err(ClassError::NotUniversal(a.to_string()));
            }
            if !a.symbols().iter().all(|s| language.has_symbol(s)) {
                return Err(ClassError::ForeignSymbol(a.to_string()));
            }
        }
        for (i, f) in forbidden.iter().enumerate() {
            if !language.contains(f.language()) {
                return Err(ClassError::BadForbidden(i));
            }
        }
        Ok(ClassSpec {
            name: name.into(),
            language,
            axioms,
            forbidden,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn axioms(&self) -> &[Formula] {
        &self.axioms
    }

    pub fn forbidden(&self) -> &[FiniteStructure] {
        &self.forbidden
    }

    /// First violated constraint, if any.
    pub fn violation(&self, s: &FiniteStructure) -> Result<Option<Violation>, EvalError> {
        for a in &self.axioms {
            if !holds_sentence(s, a)? {
                return Ok(Some(Violation::Axiom(a.clone())));
            }
        }
        for (i, f) in self.forbidden.iter().enumerate() {
            let view = if s.language() == f.language() {
                s.clone()
            } else {
                s.reduct(f.language())
            };
            if !find_embeddings(f, &view, None).is_empty() {
                return Ok(Some(Violation::Forbidden(i)));
            }
        }
        Ok(None)
    }

    pub fn is_member(&self, s: &FiniteStructure) -> Result<bool, EvalError> {
        Ok(self.violation(s)?.is_none())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    #[test]
    fn rejects_non_universal_axioms() {
        let lang = Language::relational("V", &[("E", 2)]);
        let exist = parse_formula("exists x: E(x,x)", &lang).unwrap();
        let err = ClassSpec::new("bad", lang, vec![exist], vec![]).unwrap_err();
        assert!(matches!(err, ClassError::NotUniversal(_)));
    }

    #[test]
    fn graph_membership() {
        let lang = Language::relational("V", &[("E", 2)]);
        let class = ClassSpec::new(
            "graphs",
            lang.clone(),
            vec![
                parse_formula("forall x: !E(x,x)", &lang).unwrap(),
                parse_formula("forall x y: E(x,y) -> E(y,x)", &lang).unwrap(),
            ],
            vec![],
        )
        .unwrap();
        let good = FiniteStructure::relational(lang.clone(), &["a", "b"], &[("E", &[&["a", "b"], &["b", "a"]])]);
        let bad = FiniteStructure::relational(lang, &["a", "b"], &[("E", &[&["a", "b"]])]);
        assert!(class.is_member(&good).unwrap());
        assert!(!class.is_member(&bad).unwrap());
    }
}
