//! Multi-sorted first-order signatures, terms, and formulas.
//!
//! A [`Language`] declares sorts together with relation, function, and
//! constant symbols. Formulas are ordinary first-order ASTs over a
//! language; equality is built in per sort and is never a declared
//! symbol. A [`LanguageFamily`] is an indexed collection of languages
//! with a common pairwise intersection, the setting in which fusions
//! live.

mod parser;

pub use parser::{parse_formula, parse_term, ParseError};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Prefix reserved for machine-generated variables. The surface grammar
/// only admits variables matching `[a-z][a-zA-Z0-9]*`, so generated
/// names can never collide with user input.
pub const FRESH_PREFIX: &str = "_w";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LanguageError {
    #[error("duplicate symbol name `{0}`")]
    DuplicateSymbol(String),
    #[error("symbol `{symbol}` mentions undeclared sort `{sort}`")]
    UndeclaredSort { symbol: String, sort: String },
    #[error("sort name `{0}` collides with a symbol name")]
    SortSymbolClash(String),
    #[error("duplicate sort name `{0}`")]
    DuplicateSort(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("family needs at least one member language")]
    Empty,
    #[error("member {0} does not have the same sort list as member 0")]
    SortMismatch(usize),
    #[error("members {i} and {j} intersect in {found:?}, but members {k} and {l} intersect in {expected:?}")]
    NonUniformIntersection {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        found: Vec<String>,
        expected: Vec<String>,
    },
    #[error("members {i} and {j} disagree on the profile of shared symbol `{symbol}`")]
    ProfileClash { i: usize, j: usize, symbol: String },
}

/// A multi-sorted signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Language {
    sorts: Vec<String>,
    relations: BTreeMap<String, Vec<String>>,
    functions: BTreeMap<String, (Vec<String>, String)>,
    constants: BTreeMap<String, String>,
}

impl Language {
    /// Builds a language, checking that symbol names are unique across
    /// all three kinds and that every mentioned sort is declared.
    pub fn new(
        sorts: Vec<String>,
        relations: Vec<(String, Vec<String>)>,
        functions: Vec<(String, Vec<String>, String)>,
        constants: Vec<(String, String)>,
    ) -> Result<Self, LanguageError> {
        let mut sort_set = BTreeSet::new();
        for s in &sorts {
            if !sort_set.insert(s.clone()) {
                return Err(LanguageError::DuplicateSort(s.clone()));
            }
        }
        let mut names: BTreeSet<String> = BTreeSet::new();
        let mut claim = |n: &String| -> Result<(), LanguageError> {
            if sort_set.contains(n) {
                return Err(LanguageError::SortSymbolClash(n.clone()));
            }
            if !names.insert(n.clone()) {
                return Err(LanguageError::DuplicateSymbol(n.clone()));
            }
            Ok(())
        };
        let check_sort = |symbol: &str, sort: &String| -> Result<(), LanguageError> {
            if sort_set.contains(sort) {
                Ok(())
            } else {
                Err(LanguageError::UndeclaredSort {
                    symbol: symbol.to_string(),
                    sort: sort.clone(),
                })
            }
        };
        let mut rel_map = BTreeMap::new();
        for (name, profile) in relations {
            claim(&name)?;
            for s in &profile {
                check_sort(&name, s)?;
            }
            rel_map.insert(name, profile);
        }
        let mut fun_map = BTreeMap::new();
        for (name, args, result) in functions {
            claim(&name)?;
            for s in &args {
                check_sort(&name, s)?;
            }
            check_sort(&name, &result)?;
            fun_map.insert(name, (args, result));
        }
        let mut con_map = BTreeMap::new();
        for (name, sort) in constants {
            claim(&name)?;
            check_sort(&name, &sort)?;
            con_map.insert(name, sort);
        }
        Ok(Language {
            sorts,
            relations: rel_map,
            functions: fun_map,
            constants: con_map,
        })
    }

    /// Convenience constructor for a single-sorted relational language.
    pub fn relational(sort: &str, relations: &[(&str, usize)]) -> Self {
        Language::new(
            vec![sort.to_string()],
            relations
                .iter()
                .map(|(n, k)| (n.to_string(), vec![sort.to_string(); *k]))
                .collect(),
            vec![],
            vec![],
        )
        .expect("valid relational language")
    }

    pub fn sorts(&self) -> &[String] {
        &self.sorts
    }

    pub fn default_sort(&self) -> Option<&str> {
        if self.sorts.len() == 1 {
            Some(&self.sorts[0])
        } else {
            None
        }
    }

    pub fn relations(&self) -> &BTreeMap<String, Vec<String>> {
        &self.relations
    }

    pub fn functions(&self) -> &BTreeMap<String, (Vec<String>, String)> {
        &self.functions
    }

    pub fn constants(&self) -> &BTreeMap<String, String> {
        &self.constants
    }

    pub fn relation_profile(&self, name: &str) -> Option<&Vec<String>> {
        self.relations.get(name)
    }

    pub fn function_profile(&self, name: &str) -> Option<&(Vec<String>, String)> {
        self.functions.get(name)
    }

    pub fn constant_sort(&self, name: &str) -> Option<&String> {
        self.constants.get(name)
    }

    pub fn has_sort(&self, sort: &str) -> bool {
        self.sorts.iter().any(|s| s == sort)
    }

    pub fn has_symbol(&self, name: &str) -> bool {
        self.relations.contains_key(name)
            || self.functions.contains_key(name)
            || self.constants.contains_key(name)
    }

    /// All symbol names, across kinds.
    pub fn symbols(&self) -> BTreeSet<String> {
        self.relations
            .keys()
            .chain(self.functions.keys())
            .chain(self.constants.keys())
            .cloned()
            .collect()
    }

    /// Does `self` declare every symbol of `other` with the same profile?
    pub fn contains(&self, other: &Language) -> bool {
        other
            .relations
            .iter()
            .all(|(n, p)| self.relations.get(n) == Some(p))
            && other
                .functions
                .iter()
                .all(|(n, p)| self.functions.get(n) == Some(p))
            && other
                .constants
                .iter()
                .all(|(n, s)| self.constants.get(n) == Some(s))
    }

    /// Restriction of `self` to the given symbol names (same sorts).
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Language {
        Language {
            sorts: self.sorts.clone(),
            relations: self
                .relations
                .iter()
                .filter(|(n, _)| keep.contains(*n))
                .map(|(n, p)| (n.clone(), p.clone()))
                .collect(),
            functions: self
                .functions
                .iter()
                .filter(|(n, _)| keep.contains(*n))
                .map(|(n, p)| (n.clone(), p.clone()))
                .collect(),
            constants: self
                .constants
                .iter()
                .filter(|(n, _)| keep.contains(*n))
                .map(|(n, s)| (n.clone(), s.clone()))
                .collect(),
        }
    }
}

/// An indexed family of languages with a common intersection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageFamily {
    members: Vec<Language>,
    intersection: Language,
    union: Language,
}

/// Computes the family closure of the given member languages.
///
/// Fails unless all members share one sort list and all pairwise
/// symbol intersections coincide. A singleton family has
/// `intersection = union = member`.
pub fn make_language_family(members: Vec<Language>) -> Result<LanguageFamily, FamilyError> {
    if members.is_empty() {
        return Err(FamilyError::Empty);
    }
    for (i, m) in members.iter().enumerate() {
        if m.sorts != members[0].sorts {
            return Err(FamilyError::SortMismatch(i));
        }
    }
    // Shared symbols must carry identical profiles everywhere.
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            for name in members[i].symbols().intersection(&members[j].symbols()) {
                let li = &members[i];
                let lj = &members[j];
                let same = li.relation_profile(name) == lj.relation_profile(name)
                    && li.function_profile(name) == lj.function_profile(name)
                    && li.constant_sort(name) == lj.constant_sort(name);
                if !same {
                    return Err(FamilyError::ProfileClash {
                        i,
                        j,
                        symbol: name.clone(),
                    });
                }
            }
        }
    }
    let pair_symbols = |i: usize, j: usize| -> BTreeSet<String> {
        members[i]
            .symbols()
            .intersection(&members[j].symbols())
            .cloned()
            .collect()
    };
    let mut expected: Option<(usize, usize, BTreeSet<String>)> = None;
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let found = pair_symbols(i, j);
            match &expected {
                None => expected = Some((i, j, found)),
                Some((k, l, exp)) => {
                    if &found != exp {
                        return Err(FamilyError::NonUniformIntersection {
                            i,
                            j,
                            k: *k,
                            l: *l,
                            found: found.into_iter().collect(),
                            expected: exp.iter().cloned().collect(),
                        });
                    }
                }
            }
        }
    }
    let inter_symbols = match expected {
        Some((_, _, s)) => s,
        // Singleton family: the intersection is the member itself.
        None => members[0].symbols(),
    };
    let intersection = members[0].restrict(&inter_symbols);
    let mut union = members[0].clone();
    for m in &members[1..] {
        for (n, p) in &m.relations {
            union.relations.insert(n.clone(), p.clone());
        }
        for (n, p) in &m.functions {
            union.functions.insert(n.clone(), p.clone());
        }
        for (n, s) in &m.constants {
            union.constants.insert(n.clone(), s.clone());
        }
    }
    Ok(LanguageFamily {
        members,
        intersection,
        union,
    })
}

impl LanguageFamily {
    pub fn members(&self) -> &[Language] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Language {
        &self.members[i]
    }

    pub fn intersection(&self) -> &Language {
        &self.intersection
    }

    pub fn union(&self) -> &Language {
        &self.union
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A sorted variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub sort: String,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: sort.into(),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Hands out fresh variables `_w0, _w1, ...` of requested sorts.
#[derive(Debug, Default)]
pub struct FreshVars {
    next: usize,
}

impl FreshVars {
    pub fn new() -> Self {
        FreshVars { next: 0 }
    }

    /// Start numbering above any fresh variable already present.
    pub fn avoiding<'a>(names: impl Iterator<Item = &'a str>) -> Self {
        let mut next = 0;
        for n in names {
            if let Some(rest) = n.strip_prefix(FRESH_PREFIX) {
                if let Ok(k) = rest.parse::<usize>() {
                    next = next.max(k + 1);
                }
            }
        }
        FreshVars { next }
    }

    pub fn fresh(&mut self, sort: &str) -> Var {
        let v = Var::new(format!("{}{}", FRESH_PREFIX, self.next), sort);
        self.next += 1;
        v
    }
}

/// A first-order term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn sort(&self, language: &Language) -> Option<String> {
        match self {
            Term::Var(v) => Some(v.sort.clone()),
            Term::Const(c) => language.constant_sort(c).cloned(),
            Term::App(f, _) => language.function_profile(f).map(|(_, r)| r.clone()),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.vars(out);
                }
            }
        }
    }

    pub fn symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(_) => {}
            Term::Const(c) => {
                out.insert(c.clone());
            }
            Term::App(f, args) => {
                out.insert(f.clone());
                for a in args {
                    a.symbols(out);
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{}", v),
            Term::Const(c) => write!(f, "{}", c),
            Term::App(g, args) => {
                write!(f, "{}(", g)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A first-order formula. `And([])` is truth, `Or([])` is falsehood.
/// Implication is surface syntax only; the parser desugars `a -> b`
/// to `!a | b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
}

impl Formula {
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::And(parts),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn truth() -> Formula {
        Formula::And(vec![])
    }

    pub fn falsehood() -> Formula {
        Formula::Or(vec![])
    }

    /// Free variables, with their sorts.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<Var>) {
            match f {
                Formula::Eq(l, r) => {
                    let mut vs = BTreeSet::new();
                    l.vars(&mut vs);
                    r.vars(&mut vs);
                    for v in vs {
                        if !bound.contains(&v.name) {
                            out.insert(v);
                        }
                    }
                }
                Formula::Rel(_, args) => {
                    let mut vs = BTreeSet::new();
                    for a in args {
                        a.vars(&mut vs);
                    }
                    for v in vs {
                        if !bound.contains(&v.name) {
                            out.insert(v);
                        }
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(gs) | Formula::Or(gs) => {
                    for g in gs {
                        go(g, bound, out);
                    }
                }
                Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                    let n = bound.len();
                    bound.extend(vs.iter().map(|v| v.name.clone()));
                    go(g, bound, out);
                    bound.truncate(n);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// All declared symbol names occurring in the formula.
    pub fn symbols(&self) -> BTreeSet<String> {
        fn go(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Eq(l, r) => {
                    l.symbols(out);
                    r.symbols(out);
                }
                Formula::Rel(r, args) => {
                    out.insert(r.clone());
                    for a in args {
                        a.symbols(out);
                    }
                }
                Formula::Not(g) => go(g, out),
                Formula::And(gs) | Formula::Or(gs) => {
                    for g in gs {
                        go(g, out);
                    }
                }
                Formula::Exists(_, g) | Formula::Forall(_, g) => go(g, out),
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => true,
            Formula::Not(g) => g.is_quantifier_free(),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().all(|g| g.is_quantifier_free()),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// `forall`-prefix followed by a quantifier-free body?
    pub fn is_universal(&self) -> bool {
        match self {
            Formula::Forall(_, g) => g.is_universal(),
            other => other.is_quantifier_free(),
        }
    }

    /// Renames free occurrences of variables according to `map`
    /// (capture is the caller's responsibility: target names should be
    /// fresh).
    pub fn rename_free(&self, map: &BTreeMap<String, Var>) -> Formula {
        fn term(t: &Term, map: &BTreeMap<String, Var>, shadowed: &[String]) -> Term {
            match t {
                Term::Var(v) => {
                    if shadowed.contains(&v.name) {
                        t.clone()
                    } else {
                        match map.get(&v.name) {
                            Some(w) => Term::Var(w.clone()),
                            None => t.clone(),
                        }
                    }
                }
                Term::Const(_) => t.clone(),
                Term::App(f, args) => Term::App(
                    f.clone(),
                    args.iter().map(|a| term(a, map, shadowed)).collect(),
                ),
            }
        }
        fn go(f: &Formula, map: &BTreeMap<String, Var>, shadowed: &mut Vec<String>) -> Formula {
            match f {
                Formula::Eq(l, r) => Formula::Eq(term(l, map, shadowed), term(r, map, shadowed)),
                Formula::Rel(name, args) => Formula::Rel(
                    name.clone(),
                    args.iter().map(|a| term(a, map, shadowed)).collect(),
                ),
                Formula::Not(g) => go(g, map, shadowed).not(),
                Formula::And(gs) => {
                    Formula::And(gs.iter().map(|g| go(g, map, shadowed)).collect())
                }
                Formula::Or(gs) => Formula::Or(gs.iter().map(|g| go(g, map, shadowed)).collect()),
                Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                    let n = shadowed.len();
                    shadowed.extend(vs.iter().map(|v| v.name.clone()));
                    let body = go(g, map, shadowed);
                    shadowed.truncate(n);
                    match f {
                        Formula::Exists(..) => Formula::Exists(vs.clone(), Box::new(body)),
                        _ => Formula::Forall(vs.clone(), Box::new(body)),
                    }
                }
            }
        }
        go(self, map, &mut Vec::new())
    }

    /// Renames bound variables so they are distinct from all free
    /// variables and from each other.
    pub fn normalize(&self) -> Formula {
        let free = self.free_vars();
        let mut fresh = FreshVars::avoiding(free.iter().map(|v| v.name.as_str()));
        fn go(
            f: &Formula,
            taken: &mut BTreeSet<String>,
            renames: &mut BTreeMap<String, Vec<Var>>,
            fresh: &mut FreshVars,
        ) -> Formula {
            fn rename_term(t: &Term, renames: &BTreeMap<String, Vec<Var>>) -> Term {
                match t {
                    Term::Var(v) => match renames.get(&v.name).and_then(|s| s.last()) {
                        Some(w) => Term::Var(w.clone()),
                        None => t.clone(),
                    },
                    Term::Const(_) => t.clone(),
                    Term::App(g, args) => Term::App(
                        g.clone(),
                        args.iter().map(|a| rename_term(a, renames)).collect(),
                    ),
                }
            }
            match f {
                Formula::Eq(l, r) => Formula::Eq(rename_term(l, renames), rename_term(r, renames)),
                Formula::Rel(r, args) => Formula::Rel(
                    r.clone(),
                    args.iter().map(|a| rename_term(a, renames)).collect(),
                ),
                Formula::Not(g) => go(g, taken, renames, fresh).not(),
                Formula::And(gs) => {
                    Formula::And(gs.iter().map(|g| go(g, taken, renames, fresh)).collect())
                }
                Formula::Or(gs) => {
                    Formula::Or(gs.iter().map(|g| go(g, taken, renames, fresh)).collect())
                }
                Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                    let mut new_vs = Vec::new();
                    for v in vs {
                        let w = if taken.contains(&v.name) {
                            fresh.fresh(&v.sort)
                        } else {
                            v.clone()
                        };
                        taken.insert(w.name.clone());
                        renames.entry(v.name.clone()).or_default().push(w.clone());
                        new_vs.push(w);
                    }
                    let body = go(g, taken, renames, fresh);
                    for v in vs {
                        renames.get_mut(&v.name).unwrap().pop();
                    }
                    match f {
                        Formula::Exists(..) => Formula::Exists(new_vs, Box::new(body)),
                        _ => Formula::Forall(new_vs, Box::new(body)),
                    }
                }
            }
        }
        let mut taken: BTreeSet<String> = free.iter().map(|v| v.name.clone()).collect();
        go(self, &mut taken, &mut BTreeMap::new(), &mut fresh)
    }
}

/// Returns all member indices `i` such that every symbol of the formula
/// is declared in the `i`-th member language.
pub fn classify_formula(formula: &Formula, family: &LanguageFamily) -> BTreeSet<usize> {
    let symbols = formula.symbols();
    (0..family.len())
        .filter(|&i| symbols.iter().all(|s| family.member(i).has_symbol(s)))
        .collect()
}

// Precedence levels used by the printer: Or(1) < And(2) < unary(3).
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Or(gs) if gs.len() != 1 => 1,
        Formula::And(gs) if gs.len() != 1 => 2,
        _ => 3,
    }
}

struct DisplayAt<'a>(&'a Formula, u8, bool);

impl fmt::Display for DisplayAt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let DisplayAt(formula, min, multi) = *self;
        let parens = prec(formula) < min
            || matches!(formula, Formula::Exists(..) | Formula::Forall(..)) && min > 0;
        if parens {
            write!(f, "(")?;
        }
        match formula {
            Formula::Eq(l, r) => write!(f, "{} = {}", l, r)?,
            Formula::Rel(r, args) => {
                write!(f, "{}(", r)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")?;
            }
            Formula::Not(g) => write!(f, "!{}", DisplayAt(g, 3, multi))?,
            Formula::And(gs) => match gs.len() {
                0 => write!(f, "true")?,
                1 => write!(f, "{}", DisplayAt(&gs[0], 3, multi))?,
                _ => {
                    for (i, g) in gs.iter().enumerate() {
                        if i > 0 {
                            write!(f, " & ")?;
                        }
                        write!(f, "{}", DisplayAt(g, 3, multi))?;
                    }
                }
            },
            Formula::Or(gs) => match gs.len() {
                0 => write!(f, "false")?,
                1 => write!(f, "{}", DisplayAt(&gs[0], 3, multi))?,
                _ => {
                    for (i, g) in gs.iter().enumerate() {
                        if i > 0 {
                            write!(f, " | ")?;
                        }
                        write!(f, "{}", DisplayAt(g, 2, multi))?;
                    }
                }
            },
            Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                let kw = if matches!(formula, Formula::Exists(..)) {
                    "exists"
                } else {
                    "forall"
                };
                write!(f, "{}", kw)?;
                for v in vs {
                    write!(f, " {}", v.name)?;
                    if multi {
                        write!(f, ": {}", v.sort)?;
                    }
                }
                write!(f, ": {}", DisplayAt(g, 0, multi))?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    /// Single-sorted rendering: binder sort annotations are omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", DisplayAt(self, 0, false))
    }
}

impl Formula {
    /// Renders the formula so it re-parses over `language`: sort
    /// annotations are emitted on binders iff the language is
    /// multi-sorted.
    pub fn display_in(&self, language: &Language) -> String {
        DisplayAt(self, 0, language.sorts().len() > 1).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> Language {
        Language::relational("V", &[("E", 2)])
    }

    #[test]
    fn language_rejects_duplicates() {
        let err = Language::new(
            vec!["V".into()],
            vec![("E".into(), vec!["V".into()]), ("E".into(), vec!["V".into()])],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, LanguageError::DuplicateSymbol("E".into()));
    }

    #[test]
    fn language_rejects_undeclared_sort() {
        let err = Language::new(
            vec!["V".into()],
            vec![("E".into(), vec!["W".into()])],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, LanguageError::UndeclaredSort { .. }));
    }

    fn l_with(rels: &[&str]) -> Language {
        Language::relational("V", &rels.iter().map(|r| (*r, 2)).collect::<Vec<_>>())
    }

    #[test]
    fn family_intersection_and_union() {
        let fam = make_language_family(vec![l_with(&["R", "E1"]), l_with(&["R", "E2"])]).unwrap();
        assert_eq!(
            fam.intersection().symbols(),
            ["R".to_string()].into_iter().collect()
        );
        assert_eq!(
            fam.union().symbols(),
            ["R", "E1", "E2"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn singleton_family_is_trivial() {
        let l = l_with(&["R"]);
        let fam = make_language_family(vec![l.clone()]).unwrap();
        assert_eq!(fam.intersection(), &l);
        assert_eq!(fam.union(), &l);
    }

    #[test]
    fn family_rejects_non_uniform_intersection() {
        let err = make_language_family(vec![
            l_with(&["R", "E1"]),
            l_with(&["R", "E2"]),
            l_with(&["E1", "E3"]),
        ])
        .unwrap_err();
        match err {
            FamilyError::NonUniformIntersection { i, j, .. } => assert_eq!((i, j), (0, 2)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn classification_respects_symbol_scopes() {
        let fam = make_language_family(vec![
            Language::new(
                vec!["V".into()],
                vec![
                    ("R".into(), vec!["V".into(); 3]),
                    ("E1".into(), vec!["V".into(); 2]),
                ],
                vec![],
                vec![],
            )
            .unwrap(),
            Language::new(
                vec!["V".into()],
                vec![
                    ("R".into(), vec!["V".into(); 3]),
                    ("E2".into(), vec!["V".into(); 2]),
                ],
                vec![],
                vec![],
            )
            .unwrap(),
        ])
        .unwrap();
        let x = || Term::Var(Var::new("x", "V"));
        let y = || Term::Var(Var::new("y", "V"));
        let z = || Term::Var(Var::new("z", "V"));
        let e1 = Formula::Rel("E1".into(), vec![x(), y()]);
        let r = Formula::Rel("R".into(), vec![x(), y(), z()]);
        let e2 = Formula::Rel("E2".into(), vec![y(), z()]);
        assert_eq!(classify_formula(&e1, &fam), [0].into_iter().collect());
        assert_eq!(classify_formula(&r, &fam), [0, 1].into_iter().collect());
        let mixed = Formula::And(vec![e1.clone(), e2]);
        assert!(classify_formula(&mixed, &fam).is_empty());
        // Monotone: a formula with more symbols classifies into fewer members.
        assert!(classify_formula(&e1, &fam).is_superset(&classify_formula(&mixed, &fam)));
    }

    #[test]
    fn normalize_renames_clashing_bound_vars() {
        let x = Var::new("x", "V");
        let f = Formula::Exists(
            vec![x.clone()],
            Box::new(Formula::Rel(
                "E".into(),
                vec![Term::Var(x.clone()), Term::Var(Var::new("y", "V"))],
            )),
        );
        // y free, x bound: no clash, unchanged.
        assert_eq!(f.normalize(), f);
        let clash = Formula::And(vec![
            Formula::Rel("E".into(), vec![Term::Var(x.clone()), Term::Var(x.clone())]),
            f.clone(),
        ]);
        let norm = clash.normalize();
        match &norm {
            Formula::And(parts) => match &parts[1] {
                Formula::Exists(vs, body) => {
                    assert_ne!(vs[0].name, "x");
                    assert!(body.free_vars().iter().all(|v| v.name != "x"));
                }
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
        let _ = graph();
    }
}
