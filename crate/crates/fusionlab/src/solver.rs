//! Ground-clause machinery behind enumeration, amalgam completion, and
//! forced closure.
//!
//! For a fixed carrier (and fixed function/constant tables), universal
//! axioms instantiate to clauses over ground relation atoms. A small
//! backtracking solver with unit propagation then enumerates exactly
//! the tables satisfying the axioms, in a canonical order (atoms are
//! tried `false` before `true`, so sparser structures come first).

use crate::logic::{Formula, Language, Term, Var};
use crate::structure::{tuples_over, FiniteStructure, StructureError};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("search budget exceeded after {0} nodes")]
    Budget(u64),
    #[error("axiom `{0}` is not universal")]
    NotUniversal(String),
    #[error("term `{0}` cannot be evaluated (missing table entry)")]
    BadTerm(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Caps backtracking work. `FUSIONLAB_BUDGET` overrides the default at
/// the CLI level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 5_000_000,
        }
    }
}

impl Budget {
    pub fn nodes(max_nodes: u64) -> Self {
        Budget { max_nodes }
    }
}

/// A ground literal: atom index and required truth value.
type Lit = (usize, bool);

/// Ground atoms and clauses for one carrier.
pub struct GroundProblem {
    language: Language,
    carriers: BTreeMap<String, Vec<String>>,
    functions: BTreeMap<String, BTreeMap<Vec<String>, String>>,
    constants: BTreeMap<String, String>,
    pub atoms: Vec<(String, Vec<String>)>,
    pub atom_ids: BTreeMap<(String, Vec<String>), usize>,
    pub clauses: Vec<Vec<Lit>>,
}

// Propositional shape of a grounded axiom body.
enum GProp {
    Const(bool),
    Atom(usize),
    Not(Box<GProp>),
    And(Vec<GProp>),
    Or(Vec<GProp>),
}

impl GroundProblem {
    pub fn new(
        language: &Language,
        carriers: &BTreeMap<String, Vec<String>>,
        functions: &BTreeMap<String, BTreeMap<Vec<String>, String>>,
        constants: &BTreeMap<String, String>,
        axioms: &[Formula],
    ) -> Result<Self, SolverError> {
        let mut atoms = Vec::new();
        let mut atom_ids = BTreeMap::new();
        for (name, profile) in language.relations() {
            for tuple in tuples_over(carriers, profile) {
                atom_ids.insert((name.clone(), tuple.clone()), atoms.len());
                atoms.push((name.clone(), tuple));
            }
        }
        let mut problem = GroundProblem {
            language: language.clone(),
            carriers: carriers.clone(),
            functions: functions.clone(),
            constants: constants.clone(),
            atoms,
            atom_ids,
            clauses: Vec::new(),
        };
        for axiom in axioms {
            problem.ground_axiom(axiom)?;
        }
        problem.clauses.sort();
        problem.clauses.dedup();
        Ok(problem)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    fn eval_term(&self, t: &Term, env: &BTreeMap<String, String>) -> Result<String, SolverError> {
        match t {
            Term::Var(v) => env
                .get(&v.name)
                .cloned()
                .ok_or_else(|| SolverError::BadTerm(v.name.clone())),
            Term::Const(c) => self
                .constants
                .get(c)
                .cloned()
                .ok_or_else(|| SolverError::BadTerm(c.clone())),
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_term(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.functions
                    .get(f)
                    .and_then(|t| t.get(&vals))
                    .cloned()
                    .ok_or_else(|| SolverError::BadTerm(t.to_string()))
            }
        }
    }

    fn ground_body(
        &self,
        f: &Formula,
        env: &BTreeMap<String, String>,
    ) -> Result<GProp, SolverError> {
        Ok(match f {
            Formula::Eq(l, r) => GProp::Const(self.eval_term(l, env)? == self.eval_term(r, env)?),
            Formula::Rel(name, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_term(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                match self.atom_ids.get(&(name.clone(), vals)) {
                    Some(&id) => GProp::Atom(id),
                    None => GProp::Const(false),
                }
            }
            Formula::Not(g) => GProp::Not(Box::new(self.ground_body(g, env)?)),
            Formula::And(gs) => GProp::And(
                gs.iter()
                    .map(|g| self.ground_body(g, env))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(gs) => GProp::Or(
                gs.iter()
                    .map(|g| self.ground_body(g, env))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Exists(..) | Formula::Forall(..) => {
                return Err(SolverError::NotUniversal(f.to_string()))
            }
        })
    }

    fn ground_axiom(&mut self, axiom: &Formula) -> Result<(), SolverError> {
        // Peel the forall-prefix.
        let mut vars: Vec<Var> = Vec::new();
        let mut body = axiom;
        while let Formula::Forall(vs, g) = body {
            vars.extend(vs.iter().cloned());
            body = g;
        }
        if !body.is_quantifier_free() {
            return Err(SolverError::NotUniversal(axiom.to_string()));
        }
        let profile: Vec<String> = vars.iter().map(|v| v.sort.clone()).collect();
        for assignment in tuples_over(&self.carriers, &profile) {
            let env: BTreeMap<String, String> = vars
                .iter()
                .map(|v| v.name.clone())
                .zip(assignment.iter().cloned())
                .collect();
            let g = self.ground_body(body, &env)?;
            let clauses = clausify(&nnf(g, true));
            for c in clauses {
                match c {
                    Some(lits) if lits.is_empty() => {
                        // Ground-false axiom instance: unsatisfiable carrier.
                        self.clauses.push(Vec::new());
                    }
                    Some(lits) => self.clauses.push(lits),
                    None => {} // tautology
                }
            }
        }
        Ok(())
    }

    /// Enumerates every satisfying assignment extending `fixed`, built
    /// into structures, in canonical order. `cap` limits how many
    /// solutions to return (`usize::MAX` for all).
    pub fn solutions(
        &self,
        fixed: &BTreeMap<usize, bool>,
        cap: usize,
        budget: Budget,
    ) -> Result<Vec<FiniteStructure>, SolverError> {
        let mut values: Vec<Option<bool>> = vec![None; self.atoms.len()];
        for (&id, &v) in fixed {
            values[id] = Some(v);
        }
        if self.propagate(&mut values).is_err() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let mut nodes = 0u64;
        self.dfs(&mut values, 0, cap, &mut nodes, budget, &mut out)?;
        Ok(out)
    }

    fn propagate(&self, values: &mut [Option<bool>]) -> Result<(), ()> {
        loop {
            let mut changed = false;
            'clauses: for clause in &self.clauses {
                let mut unassigned: Option<Lit> = None;
                let mut n_unassigned = 0;
                for &(id, pol) in clause {
                    match values[id] {
                        Some(v) if v == pol => continue 'clauses, // satisfied
                        Some(_) => {}
                        None => {
                            n_unassigned += 1;
                            unassigned = Some((id, pol));
                        }
                    }
                }
                match n_unassigned {
                    0 => return Err(()), // conflict
                    1 => {
                        let (id, pol) = unassigned.unwrap();
                        values[id] = Some(pol);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn dfs(
        &self,
        values: &mut Vec<Option<bool>>,
        start: usize,
        cap: usize,
        nodes: &mut u64,
        budget: Budget,
        out: &mut Vec<FiniteStructure>,
    ) -> Result<(), SolverError> {
        if out.len() >= cap {
            return Ok(());
        }
        *nodes += 1;
        if *nodes > budget.max_nodes {
            return Err(SolverError::Budget(*nodes));
        }
        let next = (start..values.len()).find(|&i| values[i].is_none());
        match next {
            None => {
                out.push(self.build(values)?);
                Ok(())
            }
            Some(i) => {
                for v in [false, true] {
                    let mut branch = values.clone();
                    branch[i] = Some(v);
                    if self.propagate(&mut branch).is_ok() {
                        self.dfs(&mut branch, i + 1, cap, nodes, budget, out)?;
                    }
                    if out.len() >= cap {
                        break;
                    }
                }
                Ok(())
            }
        }
    }

    fn build(&self, values: &[Option<bool>]) -> Result<FiniteStructure, SolverError> {
        let mut relations: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
        for (i, (name, tuple)) in self.atoms.iter().enumerate() {
            if values[i] == Some(true) {
                relations
                    .entry(name.clone())
                    .or_default()
                    .insert(tuple.clone());
            }
        }
        Ok(FiniteStructure::new(
            self.language.clone(),
            self.carriers.clone(),
            relations,
            self.functions.clone(),
            self.constants.clone(),
        )?)
    }
}

// Negation normal form over GProp; polarity-aware.
fn nnf(p: GProp, positive: bool) -> GProp {
    match (p, positive) {
        (GProp::Const(b), pos) => GProp::Const(b == pos),
        (GProp::Atom(id), true) => GProp::Atom(id),
        (GProp::Atom(id), false) => GProp::Not(Box::new(GProp::Atom(id))),
        (GProp::Not(q), pos) => nnf(*q, !pos),
        (GProp::And(qs), true) => GProp::And(qs.into_iter().map(|q| nnf(q, true)).collect()),
        (GProp::And(qs), false) => GProp::Or(qs.into_iter().map(|q| nnf(q, false)).collect()),
        (GProp::Or(qs), true) => GProp::Or(qs.into_iter().map(|q| nnf(q, true)).collect()),
        (GProp::Or(qs), false) => GProp::And(qs.into_iter().map(|q| nnf(q, false)).collect()),
    }
}

// CNF of an NNF proposition. Each clause is `Some(lits)`; `None` marks
// a tautologous clause to be dropped. An empty lits vector is the
// unsatisfiable empty clause.
fn clausify(p: &GProp) -> Vec<Option<Vec<Lit>>> {
    fn literal(p: &GProp) -> Option<Lit> {
        match p {
            GProp::Atom(id) => Some((*id, true)),
            GProp::Not(q) => match **q {
                GProp::Atom(id) => Some((id, false)),
                _ => None,
            },
            _ => None,
        }
    }
    fn clause_union(a: &[Lit], b: &[Lit]) -> Option<Vec<Lit>> {
        let mut lits: Vec<Lit> = a.to_vec();
        for &l in b {
            if lits.contains(&(l.0, !l.1)) {
                return None; // tautology
            }
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        Some(lits)
    }
    match p {
        GProp::Const(true) => vec![],
        GProp::Const(false) => vec![Some(vec![])],
        _ if literal(p).is_some() => vec![Some(vec![literal(p).unwrap()])],
        GProp::And(qs) => qs.iter().flat_map(clausify).collect(),
        GProp::Or(qs) => {
            // Cross product of the parts' clause sets.
            let mut acc: Vec<Option<Vec<Lit>>> = vec![Some(vec![])];
            for q in qs {
                let cs = clausify(q);
                let mut next = Vec::new();
                for a in &acc {
                    for c in &cs {
                        match (a, c) {
                            (Some(a), Some(c)) => next.push(clause_union(a, c)),
                            _ => next.push(None),
                        }
                    }
                }
                acc = next;
                // An empty product means some part was constant-true.
                if acc.is_empty() {
                    return vec![];
                }
            }
            acc.into_iter().flatten().map(Some).collect()
        }
        _ => unreachable!("nnf output"),
    }
}

/// Outcome of [`forced_closure`].
#[derive(Debug, Error)]
pub enum ClosureError {
    #[error("axioms force `{0}({1:?})`, which is explicitly forbidden")]
    ForcedForbidden(String, Vec<String>),
    #[error("axiom instance cannot be satisfied by adding positive atoms: {0:?}")]
    NotHorn(Vec<String>),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One-step closure of a structure under its class axioms: whenever a
/// violated ground clause has exactly one positive literal, that atom
/// is set. Atoms in `frozen_false` may not be forced. Fails when a
/// violated clause has no unique way to repair.
pub fn forced_closure(
    structure: &FiniteStructure,
    axioms: &[Formula],
    frozen_false: &BTreeSet<(String, Vec<String>)>,
) -> Result<FiniteStructure, ClosureError> {
    let problem = GroundProblem::new(
        structure.language(),
        structure.carriers(),
        structure.functions(),
        structure.constants(),
        axioms,
    )?;
    let mut truth: Vec<bool> = problem
        .atoms
        .iter()
        .map(|(name, tuple)| structure.holds(name, tuple))
        .collect();
    loop {
        let mut changed = false;
        for clause in &problem.clauses {
            let satisfied = clause.iter().any(|&(id, pol)| truth[id] == pol);
            if satisfied {
                continue;
            }
            // All literals false: repair by setting a positive literal.
            let positives: Vec<usize> = clause
                .iter()
                .filter(|&&(_, pol)| pol)
                .map(|&(id, _)| id)
                .collect();
            match positives.as_slice() {
                [] => {
                    let desc = clause
                        .iter()
                        .map(|&(id, _)| format!("{}{:?}", problem.atoms[id].0, problem.atoms[id].1))
                        .collect();
                    return Err(ClosureError::NotHorn(desc));
                }
                [id] => {
                    let atom = &problem.atoms[*id];
                    if frozen_false.contains(atom) {
                        return Err(ClosureError::ForcedForbidden(atom.0.clone(), atom.1.clone()));
                    }
                    truth[*id] = true;
                    changed = true;
                }
                _ => {
                    let desc = clause
                        .iter()
                        .map(|&(id, _)| format!("{}{:?}", problem.atoms[id].0, problem.atoms[id].1))
                        .collect();
                    return Err(ClosureError::NotHorn(desc));
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut relations: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for (i, (name, tuple)) in problem.atoms.iter().enumerate() {
        if truth[i] {
            relations
                .entry(name.clone())
                .or_default()
                .insert(tuple.clone());
        }
    }
    Ok(FiniteStructure::new(
        structure.language().clone(),
        structure.carriers().clone(),
        relations,
        structure.functions().clone(),
        structure.constants().clone(),
    )
    .map_err(SolverError::from)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Language};

    fn graph_axioms(lang: &Language) -> Vec<Formula> {
        vec![
            parse_formula("forall x: !E(x,x)", lang).unwrap(),
            parse_formula("forall x y: E(x,y) -> E(y,x)", lang).unwrap(),
        ]
    }

    #[test]
    fn counts_labeled_graphs_on_three_points() {
        let lang = Language::relational("V", &[("E", 2)]);
        let carriers: BTreeMap<String, Vec<String>> =
            [("V".to_string(), vec!["a".into(), "b".into(), "c".into()])].into();
        let problem = GroundProblem::new(
            &lang,
            &carriers,
            &BTreeMap::new(),
            &BTreeMap::new(),
            &graph_axioms(&lang),
        )
        .unwrap();
        let all = problem
            .solutions(&BTreeMap::new(), usize::MAX, Budget::default())
            .unwrap();
        // Symmetric irreflexive binary relations on 3 points: 2^3.
        assert_eq!(all.len(), 8);
    }

    #[test]
    fn forced_closure_adds_symmetric_edge() {
        let lang = Language::relational("V", &[("E", 2)]);
        let s = FiniteStructure::relational(lang.clone(), &["a", "b"], &[("E", &[&["a", "b"]])]);
        let closed = forced_closure(&s, &graph_axioms(&lang), &BTreeSet::new()).unwrap();
        assert!(closed.holds("E", &["b".to_string(), "a".to_string()]));
    }

    #[test]
    fn forced_closure_detects_frozen_conflict() {
        let lang = Language::relational("V", &[("E", 2)]);
        let s = FiniteStructure::relational(lang.clone(), &["a", "b"], &[("E", &[&["a", "b"]])]);
        let frozen: BTreeSet<(String, Vec<String>)> =
            [("E".to_string(), vec!["b".to_string(), "a".to_string()])].into();
        let err = forced_closure(&s, &graph_axioms(&lang), &frozen).unwrap_err();
        assert!(matches!(err, ClosureError::ForcedForbidden(..)));
    }

    #[test]
    fn irreflexivity_cannot_be_repaired() {
        let lang = Language::relational("V", &[("E", 2)]);
        let s = FiniteStructure::relational(lang.clone(), &["a"], &[("E", &[&["a", "a"]])]);
        let err = forced_closure(&s, &graph_axioms(&lang), &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, ClosureError::NotHorn(_)));
    }
}
