//! Amalgamation problems, free amalgams, and completion search.

use crate::class::{ClassSpec, Violation};
use crate::solver::{Budget, GroundProblem, SolverError};
use crate::structure::{find_embeddings, FiniteStructure};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AmalgamError {
    #[error("base embedding into the {0} extension is not valid")]
    BadEmbedding(&'static str),
    #[error("{0} structure is not a class member: violates {1}")]
    NotMember(&'static str, Violation),
    #[error("amalgamation requires a relational language")]
    UnsupportedFunctions,
    #[error("free amalgam violates {0}")]
    FreeAmalgamViolates(Violation),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A base structure with two extensions and the embeddings of the base
/// into each.
#[derive(Debug, Clone, PartialEq)]
pub struct AmalgamProblem {
    pub base: FiniteStructure,
    pub left: FiniteStructure,
    pub right: FiniteStructure,
    pub into_left: BTreeMap<String, String>,
    pub into_right: BTreeMap<String, String>,
}

impl AmalgamProblem {
    /// Checks the embeddings and, against `class`, membership of all
    /// three structures.
    pub fn validate(&self, class: &ClassSpec) -> Result<(), AmalgamError> {
        if !find_embeddings(&self.base, &self.left, Some(&self.into_left))
            .iter()
            .any(|e| e == &self.into_left)
        {
            return Err(AmalgamError::BadEmbedding("left"));
        }
        if !find_embeddings(&self.base, &self.right, Some(&self.into_right))
            .iter()
            .any(|e| e == &self.into_right)
        {
            return Err(AmalgamError::BadEmbedding("right"));
        }
        for (name, s) in [
            ("base", &self.base),
            ("left", &self.left),
            ("right", &self.right),
        ] {
            if let Some(v) = class.violation(s).expect("evaluable axioms") {
                return Err(AmalgamError::NotMember(name, v));
            }
        }
        Ok(())
    }
}

/// Result of amalgamation: the amalgam together with the two
/// embeddings of the extensions into it.
#[derive(Debug, Clone)]
pub struct Amalgam {
    pub structure: FiniteStructure,
    pub from_left: BTreeMap<String, String>,
    pub from_right: BTreeMap<String, String>,
}

// Carrier of the amalgam: left's elements keep their names; right-only
// elements get fresh names where they clash with left.
fn merged_carrier(problem: &AmalgamProblem) -> (FiniteStructure, BTreeMap<String, String>, BTreeMap<String, String>) {
    let left = &problem.left;
    let right = &problem.right;
    // right element -> amalgam name
    let mut right_map: BTreeMap<String, String> = BTreeMap::new();
    for (a, b1) in &problem.into_left {
        let b2 = &problem.into_right[a];
        right_map.insert(b2.clone(), b1.clone());
    }
    let taken: BTreeSet<String> = left.elements().cloned().collect();
    for e in right.elements() {
        if right_map.contains_key(e) {
            continue;
        }
        let mut candidate = e.clone();
        let mut i = 0;
        while taken.contains(&candidate) || right_map.values().any(|v| v == &candidate) {
            i += 1;
            candidate = format!("{e}_{i}");
        }
        right_map.insert(e.clone(), candidate);
    }
    let mut carriers = left.carriers().clone();
    for (sort, elems) in right.carriers() {
        let slot = carriers.entry(sort.clone()).or_default();
        for e in elems {
            let name = &right_map[e];
            if !slot.contains(name) {
                slot.push(name.clone());
            }
        }
    }
    let shell = FiniteStructure::new(
        left.language().clone(),
        carriers,
        BTreeMap::new(),
        BTreeMap::new(),
        BTreeMap::new(),
    )
    .expect("merged carrier is valid");
    let from_left: BTreeMap<String, String> =
        left.elements().map(|e| (e.clone(), e.clone())).collect();
    (shell, from_left, right_map)
}

/// The free amalgam: carrier `B1 ⊔_A B2`, relation tuples exactly the
/// images of tuples from the two sides, nothing mixed. Fails when the
/// result leaves the class (free amalgamation is not always
/// class-preserving).
pub fn free_amalgam(problem: &AmalgamProblem, class: &ClassSpec) -> Result<Amalgam, AmalgamError> {
    problem.validate(class)?;
    if !problem.left.language().functions().is_empty()
        || !problem.left.language().constants().is_empty()
    {
        return Err(AmalgamError::UnsupportedFunctions);
    }
    let (shell, from_left, from_right) = merged_carrier(problem);
    let mut relations: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for (name, table) in problem.left.relations() {
        let target = relations.entry(name.clone()).or_default();
        for tuple in table {
            target.insert(tuple.iter().map(|e| from_left[e].clone()).collect());
        }
    }
    for (name, table) in problem.right.relations() {
        let target = relations.entry(name.clone()).or_default();
        for tuple in table {
            target.insert(tuple.iter().map(|e| from_right[e].clone()).collect());
        }
    }
    let structure = FiniteStructure::new(
        shell.language().clone(),
        shell.carriers().clone(),
        relations,
        BTreeMap::new(),
        BTreeMap::new(),
    )
    .expect("free amalgam tables are sort-correct");
    if let Some(v) = class.violation(&structure).expect("evaluable axioms") {
        return Err(AmalgamError::FreeAmalgamViolates(v));
    }
    Ok(Amalgam {
        structure,
        from_left,
        from_right,
    })
}

/// Searches for any class amalgam of the problem. With `disjoint`, the
/// images of the two extensions may meet only in the base; otherwise
/// identifications between the two sides are also tried, smallest
/// first. The free amalgam is the first candidate, so free classes
/// answer quickly.
pub fn exists_amalgam(
    problem: &AmalgamProblem,
    class: &ClassSpec,
    disjoint: bool,
    budget: Budget,
) -> Result<Option<Amalgam>, AmalgamError> {
    if !problem.left.language().functions().is_empty()
        || !problem.left.language().constants().is_empty()
    {
        return Err(AmalgamError::UnsupportedFunctions);
    }
    // Fast path: the free amalgam itself.
    if let Ok(amalgam) = free_amalgam_unchecked(problem, class) {
        return Ok(Some(amalgam));
    }
    let left_extra: Vec<String> = problem
        .left
        .elements()
        .filter(|e| !problem.into_left.values().any(|v| v == *e))
        .cloned()
        .collect();
    let right_extra: Vec<String> = problem
        .right
        .elements()
        .filter(|e| !problem.into_right.values().any(|v| v == *e))
        .cloned()
        .collect();
    let matchings = if disjoint {
        vec![BTreeMap::new()]
    } else {
        partial_injections(&problem.left, &left_extra, &right_extra)
    };
    for matching in matchings {
        if let Some(amalgam) = try_matching(problem, class, &matching, budget)? {
            return Ok(Some(amalgam));
        }
    }
    Ok(None)
}

// All partial injective sort-respecting maps from `xs` into `ys`,
// smallest (empty) first.
fn partial_injections(
    host: &FiniteStructure,
    xs: &[String],
    ys: &[String],
) -> Vec<BTreeMap<String, String>> {
    let mut out: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for x in xs {
        let mut next = Vec::new();
        for m in &out {
            next.push(m.clone()); // x unmatched
            for y in ys {
                if host.sort_of(x) == host.sort_of(y) && !m.values().any(|v| v == y) {
                    let mut m2 = m.clone();
                    m2.insert(x.clone(), y.clone());
                    next.push(m2);
                }
            }
        }
        out = next;
    }
    out.sort_by_key(|m| m.len());
    out
}

fn free_amalgam_unchecked(
    problem: &AmalgamProblem,
    class: &ClassSpec,
) -> Result<Amalgam, AmalgamError> {
    let (shell, from_left, from_right) = merged_carrier(problem);
    let mut relations: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for (name, table) in problem.left.relations() {
        let t = relations.entry(name.clone()).or_default();
        for tuple in table {
            t.insert(tuple.iter().map(|e| from_left[e].clone()).collect());
        }
    }
    for (name, table) in problem.right.relations() {
        let t = relations.entry(name.clone()).or_default();
        for tuple in table {
            t.insert(tuple.iter().map(|e| from_right[e].clone()).collect());
        }
    }
    let structure = FiniteStructure::new(
        shell.language().clone(),
        shell.carriers().clone(),
        relations,
        BTreeMap::new(),
        BTreeMap::new(),
    )
    .expect("sort-correct");
    match class.violation(&structure).expect("evaluable") {
        None => Ok(Amalgam {
            structure,
            from_left,
            from_right,
        }),
        Some(v) => Err(AmalgamError::FreeAmalgamViolates(v)),
    }
}

// Attempts an amalgam where `matching` identifies left-extra with
// right-extra elements; relation values on single-side tuples are
// forced, mixed tuples are completed by the solver.
fn try_matching(
    problem: &AmalgamProblem,
    class: &ClassSpec,
    matching: &BTreeMap<String, String>,
    budget: Budget,
) -> Result<Option<Amalgam>, AmalgamError> {
    let left = &problem.left;
    let right = &problem.right;
    // right element -> amalgam name (left names win on identification)
    let mut right_map: BTreeMap<String, String> = BTreeMap::new();
    for (a, b1) in &problem.into_left {
        right_map.insert(problem.into_right[a].clone(), b1.clone());
    }
    for (l, r) in matching {
        right_map.insert(r.clone(), l.clone());
    }
    let taken: BTreeSet<String> = left.elements().cloned().collect();
    for e in right.elements() {
        if right_map.contains_key(e) {
            continue;
        }
        let mut candidate = e.clone();
        let mut i = 0;
        while taken.contains(&candidate) || right_map.values().any(|v| v == &candidate) {
            i += 1;
            candidate = format!("{e}_{i}");
        }
        right_map.insert(e.clone(), candidate);
    }
    let mut carriers = left.carriers().clone();
    for (sort, elems) in right.carriers() {
        let slot = carriers.entry(sort.clone()).or_default();
        for e in elems {
            let name = &right_map[e];
            if !slot.contains(name) {
                slot.push(name.clone());
            }
        }
    }
    let problem_ground = GroundProblem::new(
        left.language(),
        &carriers,
        &BTreeMap::new(),
        &BTreeMap::new(),
        class.axioms(),
    )?;
    // Fix atoms whose tuples lie inside one side's image.
    let left_names: BTreeSet<String> = left.elements().cloned().collect();
    let right_names: BTreeSet<String> = right_map.values().cloned().collect();
    let left_inv: BTreeMap<String, String> =
        left.elements().map(|e| (e.clone(), e.clone())).collect();
    let right_inv: BTreeMap<String, String> =
        right_map.iter().map(|(r, n)| (n.clone(), r.clone())).collect();
    let mut fixed: BTreeMap<usize, bool> = BTreeMap::new();
    for (id, (name, tuple)) in problem_ground.atoms.iter().enumerate() {
        let in_left = tuple.iter().all(|e| left_names.contains(e));
        let in_right = tuple.iter().all(|e| right_names.contains(e));
        let mut value: Option<bool> = None;
        if in_left {
            let src: Vec<String> = tuple.iter().map(|e| left_inv[e].clone()).collect();
            value = Some(left.holds(name, &src));
        }
        if in_right {
            let src: Vec<String> = tuple.iter().map(|e| right_inv[e].clone()).collect();
            let rv = right.holds(name, &src);
            match value {
                Some(lv) if lv != rv => return Ok(None), // sides disagree
                _ => value = Some(rv),
            }
        }
        if let Some(v) = value {
            fixed.insert(id, v);
        }
    }
    let cap = if class.forbidden().is_empty() { 1 } else { 64 };
    for candidate in problem_ground.solutions(&fixed, cap, budget)? {
        if class.is_member(&candidate).expect("evaluable") {
            let from_left: BTreeMap<String, String> =
                left.elements().map(|e| (e.clone(), e.clone())).collect();
            return Ok(Some(Amalgam {
                structure: candidate,
                from_left,
                from_right: right_map,
            }));
        }
    }
    Ok(None)
}
