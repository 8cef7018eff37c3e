//! Flat literals, flat conjunctions, and E♭-formulas.

use crate::logic::{Formula, Language, Term, Var};
use crate::solver::{Budget, SolverError};
use crate::structure::{evaluate, for_each_labeled, size_vectors, Assignment, FiniteStructure};
use std::collections::BTreeSet;
use std::fmt;

/// An atomic flat formula: `x = y`, `R(x1..xn)`, or `f(x1..xn) = y`,
/// all arguments single variables. Constants flatten as 0-ary functions
/// (`c = y` is the `Func` case with no arguments).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlatAtom {
    Eq(Var, Var),
    Rel(String, Vec<Var>),
    Func(String, Vec<Var>, Var),
}

impl FlatAtom {
    pub fn symbols(&self) -> BTreeSet<String> {
        match self {
            FlatAtom::Eq(..) => BTreeSet::new(),
            FlatAtom::Rel(r, _) => [r.clone()].into(),
            FlatAtom::Func(f, ..) => [f.clone()].into(),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        match self {
            FlatAtom::Eq(x, y) => vec![x.clone(), y.clone()],
            FlatAtom::Rel(_, args) => args.clone(),
            FlatAtom::Func(_, args, y) => {
                let mut v = args.clone();
                v.push(y.clone());
                v
            }
        }
    }

    fn to_formula(&self, language: &Language) -> Formula {
        match self {
            FlatAtom::Eq(x, y) => Formula::Eq(Term::Var(x.clone()), Term::Var(y.clone())),
            FlatAtom::Rel(r, args) => {
                Formula::Rel(r.clone(), args.iter().cloned().map(Term::Var).collect())
            }
            FlatAtom::Func(f, args, y) => {
                let lhs = if args.is_empty() && language.constant_sort(f).is_some() {
                    Term::Const(f.clone())
                } else {
                    Term::App(f.clone(), args.iter().cloned().map(Term::Var).collect())
                };
                Formula::Eq(lhs, Term::Var(y.clone()))
            }
        }
    }
}

/// A flat literal: an atomic flat formula or its negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlatLiteral {
    pub positive: bool,
    pub atom: FlatAtom,
}

impl FlatLiteral {
    pub fn pos(atom: FlatAtom) -> Self {
        FlatLiteral {
            positive: true,
            atom,
        }
    }

    pub fn neg(atom: FlatAtom) -> Self {
        FlatLiteral {
            positive: false,
            atom,
        }
    }

    pub fn negated(&self) -> Self {
        FlatLiteral {
            positive: !self.positive,
            atom: self.atom.clone(),
        }
    }

    pub fn to_formula(&self, language: &Language) -> Formula {
        let a = self.atom.to_formula(language);
        if self.positive {
            a
        } else {
            a.not()
        }
    }
}

impl fmt::Display for FlatLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        match &self.atom {
            FlatAtom::Eq(x, y) => write!(f, "{} = {}", x, y),
            FlatAtom::Rel(r, args) => {
                write!(f, "{}(", r)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
            FlatAtom::Func(g, args, y) => {
                write!(f, "{}(", g)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ") = {}", y)
            }
        }
    }
}

/// A flat formula: a conjunction of flat literals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlatConjunction(pub Vec<FlatLiteral>);

impl FlatConjunction {
    pub fn to_formula(&self, language: &Language) -> Formula {
        Formula::And(self.0.iter().map(|l| l.to_formula(language)).collect())
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        self.0.iter().flat_map(|l| l.atom.symbols()).collect()
    }
}

impl fmt::Display for FlatConjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "true");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{}", l)?;
        }
        Ok(())
    }
}

/// `∃ y φ(x, y)` with `φ` flat and at most one witness tuple `y` per
/// `x`-assignment. The uniqueness invariant is testable by enumeration
/// via [`EFlatFormula::check_unique_witness`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EFlatFormula {
    pub witnesses: Vec<Var>,
    pub body: FlatConjunction,
}

impl EFlatFormula {
    pub fn to_formula(&self, language: &Language) -> Formula {
        let body = self.body.to_formula(language);
        if self.witnesses.is_empty() {
            body
        } else {
            Formula::Exists(self.witnesses.clone(), Box::new(body))
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let bound: BTreeSet<&Var> = self.witnesses.iter().collect();
        self.body
            .0
            .iter()
            .flat_map(|l| l.atom.vars())
            .filter(|v| !bound.contains(v))
            .collect()
    }

    /// Verifies `forall x exists-at-most-one y: body` on every labeled
    /// structure of total size `0..=max_size` over the symbols the body
    /// mentions. Returns a violating structure if one exists.
    pub fn check_unique_witness(
        &self,
        language: &Language,
        max_size: usize,
        budget: Budget,
    ) -> Result<Option<FiniteStructure>, SolverError> {
        let restricted = language.restrict(&self.body.symbols());
        let body = self.body.to_formula(&restricted);
        let free: Vec<Var> = self.free_vars().into_iter().collect();
        let wit = self.witnesses.clone();
        let mut violation: Option<FiniteStructure> = None;
        for sizes in size_vectors(&restricted, max_size) {
            for_each_labeled(&restricted, &sizes, budget, &mut |s| {
                for x_assign in assignments_over(s, &free) {
                    let mut count = 0;
                    for y_assign in assignments_over(s, &wit) {
                        let mut full = x_assign.clone();
                        full.extend(y_assign);
                        if evaluate(s, &body, &restrict_to_free(&full, &body))
                            .expect("closed evaluation")
                        {
                            count += 1;
                            if count > 1 {
                                violation = Some(s.clone());
                                return false;
                            }
                        }
                    }
                }
                true
            })?;
            if violation.is_some() {
                break;
            }
        }
        Ok(violation)
    }
}

impl fmt::Display for EFlatFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.witnesses.is_empty() {
            write!(f, "exists")?;
            for w in &self.witnesses {
                write!(f, " {}", w)?;
            }
            write!(f, ": ")?;
        }
        write!(f, "{}", self.body)
    }
}

/// All sort-correct assignments of the given variables to elements.
pub fn assignments_over(s: &FiniteStructure, vars: &[Var]) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for v in vars {
        let carrier = s.carrier(&v.sort);
        let mut next = Vec::with_capacity(out.len() * carrier.len());
        for a in &out {
            for e in carrier {
                let mut b = a.clone();
                b.insert(v.name.clone(), e.clone());
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// Drops assignment entries for variables not free in the formula, so
/// `evaluate`'s exact-coverage contract holds.
pub fn restrict_to_free(assignment: &Assignment, formula: &Formula) -> Assignment {
    let free: BTreeSet<String> = formula.free_vars().into_iter().map(|v| v.name).collect();
    assignment
        .iter()
        .filter(|(k, _)| free.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}
