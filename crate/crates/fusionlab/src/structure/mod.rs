//! Finite multi-sorted structures and their Tarski semantics.
//!
//! Element names are strings and must be globally unique across sorts,
//! which keeps element sets, assignments, and embeddings unambiguous.
//! Structures are immutable after construction and safe to share
//! across threads.

mod embed;
mod enumerate;
mod json;

pub use embed::{
    automorphisms, canonical_form, canonical_key, find_embeddings, isomorphic, AutomorphismSet,
};
pub(crate) use embed::canonical_name;
pub use enumerate::{enumerate_members_up_to, enumerate_models, for_each_labeled, size_vectors};
pub use json::{from_json_str, to_json_string, JsonError, StructureJson};

use crate::logic::{Formula, Language, Term, Var};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("element `{0}` appears in more than one sort")]
    DuplicateElement(String),
    #[error("sort `{0}` is not declared in the language")]
    UnknownSort(String),
    #[error("symbol `{0}` is not declared in the language")]
    UnknownSymbol(String),
    #[error("tuple {1:?} for `{0}` is not sort-correct")]
    BadTuple(String, Vec<String>),
    #[error("function `{0}` is not total: missing value at {1:?}")]
    PartialFunction(String, Vec<String>),
    #[error("constant `{0}` is not assigned")]
    MissingConstant(String),
    #[error("element `{0}` is not in any carrier")]
    UnknownElement(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),
    #[error("assignment has extra entry `{0}`")]
    ExtraVariable(String),
    #[error("variable `{0}` of sort `{1}` is assigned `{2}`, which has sort `{3}`")]
    SortClash(String, String, String, String),
    #[error("formula mentions symbol `{0}` missing from the structure")]
    UnknownSymbol(String),
}

pub type Assignment = BTreeMap<String, String>;

/// A finite multi-sorted structure: sorted carriers plus tables for
/// every symbol of its language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    language: Language,
    carriers: BTreeMap<String, Vec<String>>,
    relations: BTreeMap<String, BTreeSet<Vec<String>>>,
    functions: BTreeMap<String, BTreeMap<Vec<String>, String>>,
    constants: BTreeMap<String, String>,
    elem_sorts: BTreeMap<String, String>,
}

impl FiniteStructure {
    /// Validating constructor. Relation tables may omit symbols (empty
    /// table); function tables must be total; constant assignments must
    /// be complete.
    pub fn new(
        language: Language,
        carriers: BTreeMap<String, Vec<String>>,
        relations: BTreeMap<String, BTreeSet<Vec<String>>>,
        functions: BTreeMap<String, BTreeMap<Vec<String>, String>>,
        constants: BTreeMap<String, String>,
    ) -> Result<Self, StructureError> {
        let mut elem_sorts = BTreeMap::new();
        for (sort, elems) in &carriers {
            if !language.has_sort(sort) {
                return Err(StructureError::UnknownSort(sort.clone()));
            }
            for e in elems {
                if elem_sorts.insert(e.clone(), sort.clone()).is_some() {
                    return Err(StructureError::DuplicateElement(e.clone()));
                }
            }
        }
        let mut full_carriers = carriers;
        for sort in language.sorts() {
            full_carriers.entry(sort.clone()).or_default();
        }
        let mut s = FiniteStructure {
            language,
            carriers: full_carriers,
            relations: BTreeMap::new(),
            functions: BTreeMap::new(),
            constants: BTreeMap::new(),
            elem_sorts,
        };
        for (name, table) in relations {
            let profile = s
                .language
                .relation_profile(&name)
                .ok_or_else(|| StructureError::UnknownSymbol(name.clone()))?
                .clone();
            for tuple in &table {
                s.check_tuple(&name, tuple, &profile)?;
            }
            s.relations.insert(name, table);
        }
        for name in s.language.relations().keys() {
            s.relations.entry(name.clone()).or_default();
        }
        for (name, table) in functions {
            if s.language.function_profile(&name).is_none() {
                return Err(StructureError::UnknownSymbol(name.clone()));
            }
            s.functions.insert(name, table);
        }
        for (name, (args, result)) in s.language.functions().clone() {
            let table = s.functions.entry(name.clone()).or_default().clone();
            for (tuple, value) in &table {
                s.check_tuple(&name, tuple, &args)?;
                if s.elem_sorts.get(value) != Some(&result) {
                    return Err(StructureError::BadTuple(
                        name.clone(),
                        vec![value.clone()],
                    ));
                }
            }
            for tuple in tuples_over(&s.carriers, &args) {
                if !table.contains_key(&tuple) {
                    return Err(StructureError::PartialFunction(name, tuple));
                }
            }
        }
        for (name, value) in constants {
            let sort = s
                .language
                .constant_sort(&name)
                .ok_or_else(|| StructureError::UnknownSymbol(name.clone()))?;
            if s.elem_sorts.get(&value) != Some(sort) {
                return Err(StructureError::BadTuple(name, vec![value]));
            }
            s.constants.insert(name, value);
        }
        for name in s.language.constants().keys() {
            if !s.constants.contains_key(name) {
                return Err(StructureError::MissingConstant(name.clone()));
            }
        }
        Ok(s)
    }

    fn check_tuple(
        &self,
        name: &str,
        tuple: &[String],
        profile: &[String],
    ) -> Result<(), StructureError> {
        if tuple.len() != profile.len() {
            return Err(StructureError::BadTuple(name.to_string(), tuple.to_vec()));
        }
        for (e, sort) in tuple.iter().zip(profile) {
            if self.elem_sorts.get(e) != Some(sort) {
                return Err(StructureError::BadTuple(name.to_string(), tuple.to_vec()));
            }
        }
        Ok(())
    }

    /// Single-sorted relational structure over sort `V`.
    pub fn relational(
        language: Language,
        elements: &[&str],
        tables: &[(&str, &[&[&str]])],
    ) -> Self {
        let sort = language.sorts()[0].clone();
        let carriers: BTreeMap<_, _> = [(
            sort,
            elements.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        )]
        .into();
        let relations = tables
            .iter()
            .map(|(name, rows)| {
                (
                    name.to_string(),
                    rows.iter()
                        .map(|row| row.iter().map(|e| e.to_string()).collect())
                        .collect(),
                )
            })
            .collect();
        FiniteStructure::new(language, carriers, relations, BTreeMap::new(), BTreeMap::new())
            .expect("valid relational structure")
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn carrier(&self, sort: &str) -> &[String] {
        self.carriers.get(sort).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn carriers(&self) -> &BTreeMap<String, Vec<String>> {
        &self.carriers
    }

    pub fn elements(&self) -> impl Iterator<Item = &String> {
        self.carriers.values().flatten()
    }

    pub fn size(&self) -> usize {
        self.carriers.values().map(|v| v.len()).sum()
    }

    pub fn sort_of(&self, element: &str) -> Option<&String> {
        self.elem_sorts.get(element)
    }

    pub fn contains_element(&self, element: &str) -> bool {
        self.elem_sorts.contains_key(element)
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Vec<String>>> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> &BTreeMap<String, BTreeSet<Vec<String>>> {
        &self.relations
    }

    pub fn function(&self, name: &str) -> Option<&BTreeMap<Vec<String>, String>> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> &BTreeMap<String, BTreeMap<Vec<String>, String>> {
        &self.functions
    }

    pub fn constants(&self) -> &BTreeMap<String, String> {
        &self.constants
    }

    pub fn holds(&self, relation: &str, tuple: &[String]) -> bool {
        self.relations
            .get(relation)
            .map(|t| t.contains(tuple))
            .unwrap_or(false)
    }

    pub fn apply(&self, function: &str, args: &[String]) -> Option<&String> {
        self.functions.get(function).and_then(|t| t.get(args))
    }

    /// Reduct to a smaller language: drops tables of forgotten symbols.
    pub fn reduct(&self, language: &Language) -> FiniteStructure {
        FiniteStructure::new(
            language.clone(),
            self.carriers.clone(),
            self.relations
                .iter()
                .filter(|(n, _)| language.relation_profile(n).is_some())
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
            self.functions
                .iter()
                .filter(|(n, _)| language.function_profile(n).is_some())
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
            self.constants
                .iter()
                .filter(|(n, _)| language.constant_sort(n).is_some())
                .map(|(n, e)| (n.clone(), e.clone()))
                .collect(),
        )
        .expect("reduct of a valid structure")
    }

    /// Induced substructure on `keep`. Fails when `keep` is not closed
    /// under functions or misses a constant.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> Result<FiniteStructure, StructureError> {
        for e in keep {
            if !self.contains_element(e) {
                return Err(StructureError::UnknownElement(e.clone()));
            }
        }
        let carriers: BTreeMap<String, Vec<String>> = self
            .carriers
            .iter()
            .map(|(s, es)| {
                (
                    s.clone(),
                    es.iter().filter(|e| keep.contains(*e)).cloned().collect(),
                )
            })
            .collect();
        let relations = self
            .relations
            .iter()
            .map(|(n, t)| {
                (
                    n.clone(),
                    t.iter()
                        .filter(|tuple| tuple.iter().all(|e| keep.contains(e)))
                        .cloned()
                        .collect(),
                )
            })
            .collect();
        let mut functions = BTreeMap::new();
        for (n, t) in &self.functions {
            let mut table = BTreeMap::new();
            for (args, v) in t {
                if args.iter().all(|e| keep.contains(e)) {
                    if !keep.contains(v) {
                        return Err(StructureError::PartialFunction(n.clone(), args.clone()));
                    }
                    table.insert(args.clone(), v.clone());
                }
            }
            functions.insert(n.clone(), table);
        }
        for (n, e) in &self.constants {
            if !keep.contains(e) {
                return Err(StructureError::MissingConstant(n.clone()));
            }
        }
        FiniteStructure::new(
            self.language.clone(),
            carriers,
            relations,
            functions,
            self.constants.clone(),
        )
    }

    /// Renames elements via the given injective map.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> FiniteStructure {
        let f = |e: &String| map.get(e).cloned().unwrap_or_else(|| e.clone());
        FiniteStructure::new(
            self.language.clone(),
            self.carriers
                .iter()
                .map(|(s, es)| (s.clone(), es.iter().map(&f).collect()))
                .collect(),
            self.relations
                .iter()
                .map(|(n, t)| {
                    (
                        n.clone(),
                        t.iter().map(|tuple| tuple.iter().map(&f).collect()).collect(),
                    )
                })
                .collect(),
            self.functions
                .iter()
                .map(|(n, t)| {
                    (
                        n.clone(),
                        t.iter()
                            .map(|(args, v)| (args.iter().map(&f).collect(), f(v)))
                            .collect(),
                    )
                })
                .collect(),
            self.constants
                .iter()
                .map(|(n, e)| (n.clone(), f(e)))
                .collect(),
        )
        .expect("renaming preserves validity")
    }

    fn term_value(&self, t: &Term, env: &BTreeMap<String, String>) -> Result<String, EvalError> {
        match t {
            Term::Var(v) => env
                .get(&v.name)
                .cloned()
                .ok_or_else(|| EvalError::MissingVariable(v.name.clone())),
            Term::Const(c) => self
                .constants
                .get(c)
                .cloned()
                .ok_or_else(|| EvalError::UnknownSymbol(c.clone())),
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.term_value(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.functions
                    .get(f)
                    .and_then(|t| t.get(&vals))
                    .cloned()
                    .ok_or_else(|| EvalError::UnknownSymbol(f.clone()))
            }
        }
    }

    fn eval_inner(&self, f: &Formula, env: &mut BTreeMap<String, String>) -> Result<bool, EvalError> {
        match f {
            Formula::Eq(l, r) => Ok(self.term_value(l, env)? == self.term_value(r, env)?),
            Formula::Rel(name, args) => {
                if !self.relations.contains_key(name) {
                    return Err(EvalError::UnknownSymbol(name.clone()));
                }
                let vals = args
                    .iter()
                    .map(|a| self.term_value(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(self.holds(name, &vals))
            }
            Formula::Not(g) => Ok(!self.eval_inner(g, env)?),
            Formula::And(gs) => {
                for g in gs {
                    if !self.eval_inner(g, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.eval_inner(g, env)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Exists(vs, g) => self.eval_quantifier(vs, g, env, false),
            Formula::Forall(vs, g) => self.eval_quantifier(vs, g, env, true),
        }
    }

    fn eval_quantifier(
        &self,
        vs: &[Var],
        body: &Formula,
        env: &mut BTreeMap<String, String>,
        universal: bool,
    ) -> Result<bool, EvalError> {
        fn rec(
            s: &FiniteStructure,
            vs: &[Var],
            body: &Formula,
            env: &mut BTreeMap<String, String>,
            universal: bool,
        ) -> Result<bool, EvalError> {
            match vs.split_first() {
                None => s.eval_inner(body, env),
                Some((v, rest)) => {
                    let carrier = s.carrier(&v.sort).to_vec();
                    let saved = env.get(&v.name).cloned();
                    for e in carrier {
                        env.insert(v.name.clone(), e);
                        let r = rec(s, rest, body, env, universal)?;
                        if r != universal {
                            restore(env, &v.name, saved);
                            return Ok(!universal);
                        }
                    }
                    restore(env, &v.name, saved);
                    Ok(universal)
                }
            }
        }
        fn restore(env: &mut BTreeMap<String, String>, name: &str, saved: Option<String>) {
            match saved {
                Some(old) => {
                    env.insert(name.to_string(), old);
                }
                None => {
                    env.remove(name);
                }
            }
        }
        rec(self, vs, body, env, universal)
    }
}

/// All sort-correct tuples over the carriers for the given profile, in
/// lexicographic carrier order.
pub fn tuples_over(
    carriers: &BTreeMap<String, Vec<String>>,
    profile: &[String],
) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for sort in profile {
        let elems = carriers.get(sort).cloned().unwrap_or_default();
        let mut next = Vec::with_capacity(out.len() * elems.len());
        for tuple in &out {
            for e in &elems {
                let mut t = tuple.clone();
                t.push(e.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Standard satisfaction. The assignment must cover exactly the free
/// variables of the formula, sort-correctly.
pub fn evaluate(
    structure: &FiniteStructure,
    formula: &Formula,
    assignment: &Assignment,
) -> Result<bool, EvalError> {
    let free = formula.free_vars();
    for v in &free {
        match assignment.get(&v.name) {
            None => return Err(EvalError::MissingVariable(v.name.clone())),
            Some(e) => match structure.sort_of(e) {
                Some(s) if *s == v.sort => {}
                Some(s) => {
                    return Err(EvalError::SortClash(
                        v.name.clone(),
                        v.sort.clone(),
                        e.clone(),
                        s.clone(),
                    ))
                }
                None => {
                    return Err(EvalError::SortClash(
                        v.name.clone(),
                        v.sort.clone(),
                        e.clone(),
                        "<none>".into(),
                    ))
                }
            },
        }
    }
    for name in assignment.keys() {
        if !free.iter().any(|v| &v.name == name) {
            return Err(EvalError::ExtraVariable(name.clone()));
        }
    }
    let mut env = assignment.clone();
    structure.eval_inner(formula, &mut env)
}

/// Evaluates a sentence (no free variables).
pub fn holds_sentence(structure: &FiniteStructure, sentence: &Formula) -> Result<bool, EvalError> {
    evaluate(structure, sentence, &Assignment::new())
}

/// Least substructure containing `seed`: adds all constants and closes
/// under functions. Returns the substructure with the inclusion map.
pub fn generated_substructure(
    structure: &FiniteStructure,
    seed: &BTreeSet<String>,
) -> Result<(FiniteStructure, BTreeMap<String, String>), StructureError> {
    let set = generated_set(structure, seed)?;
    let sub = structure.restrict(&set)?;
    let inclusion = set.iter().map(|e| (e.clone(), e.clone())).collect();
    Ok((sub, inclusion))
}

/// The carrier of the generated substructure, without restricting.
pub fn generated_set(
    structure: &FiniteStructure,
    seed: &BTreeSet<String>,
) -> Result<BTreeSet<String>, StructureError> {
    for e in seed {
        if !structure.contains_element(e) {
            return Err(StructureError::UnknownElement(e.clone()));
        }
    }
    let mut set: BTreeSet<String> = seed.clone();
    set.extend(structure.constants().values().cloned());
    loop {
        let mut added = Vec::new();
        for table in structure.functions().values() {
            for (args, value) in table {
                if args.iter().all(|a| set.contains(a)) && !set.contains(value) {
                    added.push(value.clone());
                }
            }
        }
        if added.is_empty() {
            break;
        }
        set.extend(added);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Language};

    fn graph_lang() -> Language {
        Language::relational("V", &[("E", 2)])
    }

    pub fn triangle() -> FiniteStructure {
        FiniteStructure::relational(
            graph_lang(),
            &["a", "b", "c"],
            &[(
                "E",
                &[
                    &["a", "b"],
                    &["b", "a"],
                    &["b", "c"],
                    &["c", "b"],
                    &["a", "c"],
                    &["c", "a"],
                ],
            )],
        )
    }

    pub fn path3() -> FiniteStructure {
        FiniteStructure::relational(
            graph_lang(),
            &["a", "b", "c"],
            &[("E", &[&["a", "b"], &["b", "a"], &["b", "c"], &["c", "b"]])],
        )
    }

    #[test]
    fn every_vertex_of_k3_has_a_neighbor() {
        let f = parse_formula("forall x: exists y: E(x,y)", &graph_lang()).unwrap();
        assert!(holds_sentence(&triangle(), &f).unwrap());
    }

    #[test]
    fn single_vertex_has_no_neighbor() {
        let s = FiniteStructure::relational(graph_lang(), &["a"], &[("E", &[])]);
        let f = parse_formula("exists y: E(x,y)", &graph_lang()).unwrap();
        let assign: Assignment = [("x".to_string(), "a".to_string())].into();
        assert!(!evaluate(&s, &f, &assign).unwrap());
    }

    #[test]
    fn path_endpoints_not_adjacent() {
        let f = parse_formula("E(x,y)", &graph_lang()).unwrap();
        let assign: Assignment = [
            ("x".to_string(), "a".to_string()),
            ("y".to_string(), "c".to_string()),
        ]
        .into();
        assert!(!evaluate(&path3(), &f, &assign).unwrap());
    }

    #[test]
    fn assignment_errors() {
        let f = parse_formula("E(x,y)", &graph_lang()).unwrap();
        let missing: Assignment = [("x".to_string(), "a".to_string())].into();
        assert!(matches!(
            evaluate(&path3(), &f, &missing),
            Err(EvalError::MissingVariable(_))
        ));
        let extra: Assignment = [
            ("x".to_string(), "a".to_string()),
            ("y".to_string(), "b".to_string()),
            ("z".to_string(), "c".to_string()),
        ]
        .into();
        assert!(matches!(
            evaluate(&path3(), &f, &extra),
            Err(EvalError::ExtraVariable(_))
        ));
    }

    fn functional_lang() -> Language {
        Language::new(
            vec!["V".into()],
            vec![],
            vec![("f".into(), vec!["V".into()], "V".into())],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn generated_substructure_closes_under_functions() {
        let s = FiniteStructure::new(
            functional_lang(),
            [("V".to_string(), vec!["a".into(), "b".into(), "c".into()])].into(),
            BTreeMap::new(),
            [(
                "f".to_string(),
                [
                    (vec!["a".to_string()], "b".to_string()),
                    (vec!["b".to_string()], "b".to_string()),
                    (vec!["c".to_string()], "a".to_string()),
                ]
                .into(),
            )]
            .into(),
            BTreeMap::new(),
        )
        .unwrap();
        let (sub, _) = generated_substructure(&s, &["a".to_string()].into()).unwrap();
        assert_eq!(
            sub.elements().cloned().collect::<Vec<_>>(),
            vec!["a".to_string(), "b".to_string()]
        );
    }

    #[test]
    fn generated_substructure_relational_is_seed() {
        let s = path3();
        let (sub, _) = generated_substructure(&s, &["a".to_string()].into()).unwrap();
        assert_eq!(sub.size(), 1);
    }

    #[test]
    fn empty_seed_with_constant() {
        let lang = Language::new(
            vec!["V".into()],
            vec![],
            vec![("f".into(), vec!["V".into()], "V".into())],
            vec![("c".into(), "V".into())],
        )
        .unwrap();
        let s = FiniteStructure::new(
            lang,
            [("V".to_string(), vec!["a".into(), "b".into()])].into(),
            BTreeMap::new(),
            [(
                "f".to_string(),
                [
                    (vec!["a".to_string()], "a".to_string()),
                    (vec!["b".to_string()], "a".to_string()),
                ]
                .into(),
            )]
            .into(),
            [("c".to_string(), "b".to_string())].into(),
        )
        .unwrap();
        let (sub, _) = generated_substructure(&s, &BTreeSet::new()).unwrap();
        assert_eq!(sub.size(), 2); // c = b, and f(b) = a
    }

    #[test]
    fn totality_is_enforced() {
        let err = FiniteStructure::new(
            functional_lang(),
            [("V".to_string(), vec!["a".into()])].into(),
            BTreeMap::new(),
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, StructureError::PartialFunction(..)));
    }
}
