//! The syntactic toolkit: flattening quantifier-free formulas to E♭
//! disjunctions, splitting flat formulas across a language family, flat
//! diagrams, Morleyization, and bounded-witness bookkeeping.

mod flat;

pub use flat::{
    assignments_over, restrict_to_free, EFlatFormula, FlatAtom, FlatConjunction, FlatLiteral,
};

use crate::class::ClassSpec;
use crate::logic::{Formula, FreshVars, Language, LanguageFamily, Term, Var};
use crate::solver::{Budget, SolverError};
use crate::structure::{
    enumerate_members_up_to, evaluate, for_each_labeled, size_vectors, Assignment, FiniteStructure,
};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Ceiling on the total number of literals a DNF expansion may produce.
pub const DEFAULT_LITERAL_BUDGET: usize = 512;

#[derive(Debug, Error)]
pub enum FlattenError {
    #[error("input contains quantifiers")]
    NotQuantifierFree,
    #[error("DNF expansion needs more than {budget} literals")]
    LiteralBudget { budget: usize },
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("literal `{0}` does not classify into any member language")]
    Unclassifiable(String),
}

#[derive(Debug, Error)]
pub enum MorleyError {
    #[error("duplicate formula in Morleyization input: `{0}`")]
    Duplicate(String),
    #[error("formula `{0}` mentions symbols outside the language")]
    ForeignSymbol(String),
}

#[derive(Debug, Error)]
pub enum BoundedError {
    #[error("formula mentions symbols outside the class language")]
    LanguageMismatch,
    #[error("witness variable `{0}` is not free in the formula")]
    UnknownWitness(String),
    #[error("library entry `{0}` has no verified bound record")]
    Unverified(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

// Propositional skeleton over flat literals.
enum Sk {
    Lit(FlatLiteral),
    Not(Box<Sk>),
    And(Vec<Sk>),
    Or(Vec<Sk>),
}

struct Flattener<'a> {
    language: &'a Language,
    fresh: FreshVars,
    witness_of: BTreeMap<Term, Var>,
    defs: Vec<FlatLiteral>,
    def_index: BTreeMap<Var, usize>,
}

impl Flattener<'_> {
    // Full witness for a non-variable term: defines the term's value.
    fn witness(&mut self, t: &Term) -> Var {
        if let Term::Var(v) = t {
            return v.clone();
        }
        if let Some(w) = self.witness_of.get(t) {
            return w.clone();
        }
        let (name, arg_vars) = self.top(t);
        let sort = t.sort(self.language).expect("well-sorted term");
        let w = self.fresh.fresh(&sort);
        self.witness_of.insert(t.clone(), w.clone());
        self.def_index.insert(w.clone(), self.defs.len());
        self.defs
            .push(FlatLiteral::pos(FlatAtom::Func(name, arg_vars, w.clone())));
        w
    }

    // Head symbol and argument variables of a non-variable term,
    // witnessing the arguments as needed.
    fn top(&mut self, t: &Term) -> (String, Vec<Var>) {
        match t {
            Term::Const(c) => (c.clone(), vec![]),
            Term::App(f, args) => {
                let vars = args.iter().map(|a| self.witness(a)).collect();
                (f.clone(), vars)
            }
            Term::Var(_) => unreachable!("variables have no head"),
        }
    }

    fn atom(&mut self, f: &Formula) -> FlatAtom {
        match f {
            Formula::Eq(Term::Var(x), Term::Var(y)) => FlatAtom::Eq(x.clone(), y.clone()),
            Formula::Eq(t, Term::Var(y)) => {
                let (name, args) = self.top(t);
                FlatAtom::Func(name, args, y.clone())
            }
            Formula::Eq(Term::Var(x), t) => {
                let (name, args) = self.top(t);
                FlatAtom::Func(name, args, x.clone())
            }
            Formula::Eq(t1, t2) => {
                let w2 = self.witness(t2);
                let (name, args) = self.top(t1);
                FlatAtom::Func(name, args, w2)
            }
            Formula::Rel(r, args) => {
                let vars = args.iter().map(|a| self.witness(a)).collect();
                FlatAtom::Rel(r.clone(), vars)
            }
            _ => unreachable!("callers pass atoms"),
        }
    }

    fn skeleton(&mut self, f: &Formula) -> Result<Sk, FlattenError> {
        Ok(match f {
            Formula::Eq(..) | Formula::Rel(..) => Sk::Lit(FlatLiteral::pos(self.atom(f))),
            Formula::Not(g) => Sk::Not(Box::new(self.skeleton(g)?)),
            Formula::And(gs) => Sk::And(
                gs.iter()
                    .map(|g| self.skeleton(g))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(gs) => Sk::Or(
                gs.iter()
                    .map(|g| self.skeleton(g))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Exists(..) | Formula::Forall(..) => {
                return Err(FlattenError::NotQuantifierFree)
            }
        })
    }
}

fn nnf(sk: Sk, positive: bool) -> Sk {
    match (sk, positive) {
        (Sk::Lit(l), true) => Sk::Lit(l),
        (Sk::Lit(l), false) => Sk::Lit(l.negated()),
        (Sk::Not(inner), pos) => nnf(*inner, !pos),
        (Sk::And(parts), true) => Sk::And(parts.into_iter().map(|p| nnf(p, true)).collect()),
        (Sk::And(parts), false) => Sk::Or(parts.into_iter().map(|p| nnf(p, false)).collect()),
        (Sk::Or(parts), true) => Sk::Or(parts.into_iter().map(|p| nnf(p, true)).collect()),
        (Sk::Or(parts), false) => Sk::And(parts.into_iter().map(|p| nnf(p, false)).collect()),
    }
}

// Disjunctive normal form with a literal budget. Disjuncts containing
// a complementary literal pair are dropped.
fn dnf(sk: &Sk, budget: usize) -> Result<Vec<Vec<FlatLiteral>>, FlattenError> {
    fn size(ds: &[Vec<FlatLiteral>]) -> usize {
        ds.iter().map(|d| d.len().max(1)).sum()
    }
    let out = match sk {
        Sk::Lit(l) => vec![vec![l.clone()]],
        Sk::Or(parts) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend(dnf(p, budget)?);
                if size(&out) > budget {
                    return Err(FlattenError::LiteralBudget { budget });
                }
            }
            out
        }
        Sk::And(parts) => {
            let mut acc: Vec<Vec<FlatLiteral>> = vec![vec![]];
            for p in parts {
                let ds = dnf(p, budget)?;
                let mut next = Vec::new();
                'combo: for a in &acc {
                    for d in &ds {
                        let mut merged = a.clone();
                        for l in d {
                            if merged.contains(&l.negated()) {
                                continue 'combo;
                            }
                            if !merged.contains(l) {
                                merged.push(l.clone());
                            }
                        }
                        next.push(merged);
                        if size(&next) > budget {
                            return Err(FlattenError::LiteralBudget { budget });
                        }
                    }
                }
                acc = next;
            }
            acc
        }
        Sk::Not(_) => unreachable!("nnf output"),
    };
    Ok(out)
}

/// Flattens a quantifier-free formula into a logically equivalent
/// disjunction of E♭-formulas: terms are unnested bottom-up with one
/// witness per non-variable subterm, the skeleton goes to DNF, and each
/// disjunct keeps only the witness chain it uses.
pub fn flatten_to_eflat(
    formula: &Formula,
    language: &Language,
    literal_budget: usize,
) -> Result<Vec<EFlatFormula>, FlattenError> {
    if !formula.is_quantifier_free() {
        return Err(FlattenError::NotQuantifierFree);
    }
    let mut fl = Flattener {
        language,
        fresh: FreshVars::avoiding(formula.free_vars().iter().map(|v| v.name.as_str())),
        witness_of: BTreeMap::new(),
        defs: Vec::new(),
        def_index: BTreeMap::new(),
    };
    let sk = fl.skeleton(formula)?;
    let disjuncts = dnf(&nnf(sk, true), literal_budget)?;

    let mut out = Vec::new();
    for d in disjuncts {
        // Transitive closure of witness dependencies used by the
        // disjunct's literals.
        let mut needed: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<Var> = d.iter().flat_map(|l| l.atom.vars()).collect();
        while let Some(v) = stack.pop() {
            if let Some(&idx) = fl.def_index.get(&v) {
                if needed.insert(idx) {
                    stack.extend(fl.defs[idx].atom.vars());
                }
            }
        }
        let mut body: Vec<FlatLiteral> = Vec::new();
        let mut witnesses = Vec::new();
        for idx in &needed {
            let def = &fl.defs[*idx];
            if let FlatAtom::Func(_, _, w) = &def.atom {
                witnesses.push(w.clone());
            }
            body.push(def.clone());
        }
        for l in d {
            if !body.contains(&l) {
                body.push(l);
            }
        }
        out.push(EFlatFormula {
            witnesses,
            body: FlatConjunction(body),
        });
    }
    Ok(out)
}

/// Splits a flat conjunction into per-member flat conjunctions.
/// Literals classifying into several members go to the least index.
/// Re-conjoining the parts is a permutation of the input.
pub fn split_flat_by_language(
    flat: &FlatConjunction,
    family: &LanguageFamily,
) -> Result<BTreeMap<usize, FlatConjunction>, SplitError> {
    let mut out: BTreeMap<usize, FlatConjunction> = BTreeMap::new();
    for literal in &flat.0 {
        let symbols = literal.atom.symbols();
        let home = (0..family.len())
            .find(|&i| symbols.iter().all(|s| family.member(i).has_symbol(s)))
            .ok_or_else(|| SplitError::Unclassifiable(literal.to_string()))?;
        out.entry(home).or_default().0.push(literal.clone());
    }
    Ok(out)
}

/// The flat diagram: every flat literal sentence over the structure's
/// named elements, with truth read off the structure. Elements appear
/// as variables named after themselves.
pub fn flat_diagram(structure: &FiniteStructure) -> Vec<FlatLiteral> {
    let var = |e: &String| Var::new(e.clone(), structure.sort_of(e).unwrap().clone());
    let mut out = Vec::new();
    for elements in structure.carriers().values() {
        for x in elements {
            for y in elements {
                let atom = FlatAtom::Eq(var(x), var(y));
                out.push(if x == y {
                    FlatLiteral::pos(atom)
                } else {
                    FlatLiteral::neg(atom)
                });
            }
        }
    }
    for (name, profile) in structure.language().relations() {
        for tuple in crate::structure::tuples_over(structure.carriers(), profile) {
            let atom = FlatAtom::Rel(name.clone(), tuple.iter().map(&var).collect());
            out.push(if structure.holds(name, &tuple) {
                FlatLiteral::pos(atom)
            } else {
                FlatLiteral::neg(atom)
            });
        }
    }
    for (name, (args, result)) in structure.language().functions() {
        for tuple in crate::structure::tuples_over(structure.carriers(), args) {
            let value = structure.apply(name, &tuple).unwrap();
            for y in structure.carrier(result) {
                let atom = FlatAtom::Func(name.clone(), tuple.iter().map(&var).collect(), var(y));
                out.push(if y == value {
                    FlatLiteral::pos(atom)
                } else {
                    FlatLiteral::neg(atom)
                });
            }
        }
    }
    for (name, value) in structure.constants() {
        let sort = structure.language().constant_sort(name).unwrap();
        for y in structure.carrier(sort) {
            let atom = FlatAtom::Func(name.clone(), vec![], var(y));
            out.push(if y == value {
                FlatLiteral::pos(atom)
            } else {
                FlatLiteral::neg(atom)
            });
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("naming map misses element `{0}`")]
    Unmapped(String),
}

/// Does `host` satisfy the diagram under the naming map? True exactly
/// when the map is an embedding of the diagram's structure into `host`.
pub fn satisfies_flat_diagram(
    diagram: &[FlatLiteral],
    host: &FiniteStructure,
    naming: &BTreeMap<String, String>,
) -> Result<bool, DiagramError> {
    let image = |v: &Var| -> Result<String, DiagramError> {
        naming
            .get(&v.name)
            .cloned()
            .ok_or_else(|| DiagramError::Unmapped(v.name.clone()))
    };
    for literal in diagram {
        let truth = match &literal.atom {
            FlatAtom::Eq(x, y) => image(x)? == image(y)?,
            FlatAtom::Rel(r, args) => {
                let tuple = args.iter().map(&image).collect::<Result<Vec<_>, _>>()?;
                host.holds(r, &tuple)
            }
            FlatAtom::Func(f, args, y) => {
                let tuple = args.iter().map(&image).collect::<Result<Vec<_>, _>>()?;
                let y = image(y)?;
                match host.apply(f, &tuple) {
                    Some(v) => *v == y,
                    // 0-ary head may be a constant symbol.
                    None if tuple.is_empty() => host.constants().get(f) == Some(&y),
                    None => false,
                }
            }
        };
        if truth != literal.positive {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of Morleyizing a list of formulas over a language.
#[derive(Debug, Clone)]
pub struct MorleyizationResult {
    /// The expanded language with one fresh relation per formula.
    pub language: Language,
    /// Input formula, fresh symbol name, and argument variables in
    /// first-occurrence order.
    pub definitions: Vec<(Formula, String, Vec<Var>)>,
    /// Defining biconditional axioms, one per fresh symbol.
    pub axioms: Vec<Formula>,
}

fn ordered_free_vars(f: &Formula) -> Vec<Var> {
    fn term(t: &Term, bound: &[String], out: &mut Vec<Var>) {
        match t {
            Term::Var(v) => {
                if !bound.contains(&v.name) && !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    term(a, bound, out);
                }
            }
        }
    }
    fn go(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<Var>) {
        match f {
            Formula::Eq(l, r) => {
                term(l, bound, out);
                term(r, bound, out);
            }
            Formula::Rel(_, args) => {
                for a in args {
                    term(a, bound, out);
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
    let mut out = Vec::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

/// Definitional expansion: one fresh relation symbol per formula, with
/// a biconditional axiom defining it. Fresh names are `D0, D1, ...`,
/// skipping collisions with declared symbols and sorts.
pub fn morleyize(
    language: &Language,
    formulas: &[Formula],
) -> Result<MorleyizationResult, MorleyError> {
    let mut seen = BTreeSet::new();
    for f in formulas {
        if !seen.insert(f.clone()) {
            return Err(MorleyError::Duplicate(f.to_string()));
        }
        if !f.symbols().iter().all(|s| language.has_symbol(s)) {
            return Err(MorleyError::ForeignSymbol(f.to_string()));
        }
    }
    let mut next_id = 0usize;
    let mut fresh_name = || {
        loop {
            let name = format!("D{next_id}");
            next_id += 1;
            if !language.has_symbol(&name) && !language.has_sort(&name) {
                return name;
            }
        }
    };
    let mut relations: Vec<(String, Vec<String>)> = language
        .relations()
        .iter()
        .map(|(n, p)| (n.clone(), p.clone()))
        .collect();
    let mut definitions = Vec::new();
    let mut axioms = Vec::new();
    for f in formulas {
        let vars = ordered_free_vars(f);
        let name = fresh_name();
        relations.push((name.clone(), vars.iter().map(|v| v.sort.clone()).collect()));
        let atom = Formula::Rel(name.clone(), vars.iter().cloned().map(Term::Var).collect());
        let iff = Formula::And(vec![
            Formula::Or(vec![atom.clone().not(), f.clone()]),
            Formula::Or(vec![f.clone().not(), atom.clone()]),
        ]);
        let axiom = if vars.is_empty() {
            iff
        } else {
            Formula::Forall(vars.clone(), Box::new(iff))
        };
        axioms.push(axiom);
        definitions.push((f.clone(), name, vars));
    }
    let expanded = Language::new(
        language.sorts().to_vec(),
        relations,
        language
            .functions()
            .iter()
            .map(|(n, (a, r))| (n.clone(), a.clone(), r.clone()))
            .collect(),
        language
            .constants()
            .iter()
            .map(|(n, s)| (n.clone(), s.clone()))
            .collect(),
    )
    .expect("fresh symbols cannot clash");
    Ok(MorleyizationResult {
        language: expanded,
        definitions,
        axioms,
    })
}

/// The canonical expansion: interprets every fresh symbol by the tuples
/// where its defining formula holds.
pub fn expand_structure(
    result: &MorleyizationResult,
    structure: &FiniteStructure,
) -> FiniteStructure {
    let mut relations = structure.relations().clone();
    for (formula, name, vars) in &result.definitions {
        let mut table = BTreeSet::new();
        for assignment in assignments_over(structure, vars) {
            if evaluate(structure, formula, &assignment).expect("well-sorted definition") {
                table.insert(vars.iter().map(|v| assignment[&v.name].clone()).collect());
            }
        }
        relations.insert(name.clone(), table);
    }
    FiniteStructure::new(
        result.language.clone(),
        structure.carriers().clone(),
        relations,
        structure.functions().clone(),
        structure.constants().clone(),
    )
    .expect("canonical expansion is valid")
}

/// Provenance of a bound: either checked on all class members up to a
/// size, or declared by a supplying theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundRecord {
    CheckedUpToSize { class: String, size: usize },
    Declared { source: String },
}

/// A formula `φ(x, y)` together with a witness bound `k` for `y` and
/// the record of how the bound was verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedFormula {
    pub formula: Formula,
    pub witnesses: Vec<Var>,
    pub bound: usize,
    pub record: BoundRecord,
}

impl BoundedFormula {
    /// Quantifier-free formulas are bounded with `k = 1` by convention
    /// (empty witness tuple).
    pub fn quantifier_free(formula: Formula) -> Self {
        BoundedFormula {
            formula,
            witnesses: vec![],
            bound: 1,
            record: BoundRecord::Declared {
                source: "quantifier-free, bound 1 by convention".into(),
            },
        }
    }

    pub fn parameter_vars(&self) -> Vec<Var> {
        self.formula
            .free_vars()
            .into_iter()
            .filter(|v| !self.witnesses.contains(v))
            .collect()
    }
}

/// Verdict of a bounded-witness check. Verification is always relative
/// to the explicit size bound; the workbench never claims theory-level
/// boundedness.
#[derive(Debug, Clone)]
pub enum BoundedVerdict {
    VerifiedUpToSize(usize),
    Refuted {
        structure: FiniteStructure,
        assignment: Assignment,
        count: usize,
    },
}

/// Checks `forall x exists-at-most-k y: φ` on every class member of
/// total size `0..=size_limit`.
pub fn check_bounded(
    formula: &Formula,
    witnesses: &[Var],
    class: &ClassSpec,
    k: usize,
    size_limit: usize,
    budget: Budget,
) -> Result<BoundedVerdict, BoundedError> {
    if !formula
        .symbols()
        .iter()
        .all(|s| class.language().has_symbol(s))
    {
        return Err(BoundedError::LanguageMismatch);
    }
    let free = formula.free_vars();
    for w in witnesses {
        if !free.contains(w) {
            return Err(BoundedError::UnknownWitness(w.name.clone()));
        }
    }
    let params: Vec<Var> = free
        .iter()
        .filter(|v| !witnesses.contains(v))
        .cloned()
        .collect();
    for member in enumerate_members_up_to(class, size_limit, budget)? {
        for x_assign in assignments_over(&member, &params) {
            let mut count = 0;
            for y_assign in assignments_over(&member, witnesses) {
                let mut full = x_assign.clone();
                full.extend(y_assign);
                if evaluate(&member, formula, &restrict_to_free(&full, formula))
                    .expect("checked symbols")
                {
                    count += 1;
                }
            }
            if count > k {
                return Ok(BoundedVerdict::Refuted {
                    structure: member,
                    assignment: x_assign,
                    count,
                });
            }
        }
    }
    Ok(BoundedVerdict::VerifiedUpToSize(size_limit))
}

/// Conjunction of two bounded formulas: witness tuples are renamed
/// apart and the bounds multiply.
pub fn conjoin_bounded(f1: &BoundedFormula, f2: &BoundedFormula) -> BoundedFormula {
    let mut taken: BTreeSet<String> = f1.formula.free_vars().iter().map(|v| v.name.clone()).collect();
    taken.extend(f2.formula.free_vars().iter().map(|v| v.name.clone()));
    let mut fresh = FreshVars::avoiding(taken.iter().map(|s| s.as_str()));
    let clashes: Vec<&Var> = f2
        .witnesses
        .iter()
        .filter(|w| f1.formula.free_vars().iter().any(|v| v.name == w.name))
        .collect();
    let rename: BTreeMap<String, Var> = clashes
        .iter()
        .map(|w| (w.name.clone(), fresh.fresh(&w.sort)))
        .collect();
    let f2_formula = f2.formula.rename_free(&rename);
    let f2_witnesses: Vec<Var> = f2
        .witnesses
        .iter()
        .map(|w| rename.get(&w.name).cloned().unwrap_or_else(|| w.clone()))
        .collect();
    let mut witnesses = f1.witnesses.clone();
    witnesses.extend(f2_witnesses);
    BoundedFormula {
        formula: Formula::And(vec![f1.formula.clone(), f2_formula]),
        witnesses,
        bound: f1.bound * f2.bound,
        record: BoundRecord::Declared {
            source: format!(
                "conjunction of bounds {} and {} (product rule)",
                f1.bound, f2.bound
            ),
        },
    }
}

/// Exhaustive logical-equivalence check: `f` and `g` agree under every
/// assignment on every labeled structure of total size `0..=max_size`
/// over `language`. Returns a violating (structure, assignment) pair if
/// one exists. This is the workbench's only notion of equivalence:
/// certified up to the stated size, never beyond.
pub fn equivalent_up_to_size(
    f: &Formula,
    g: &Formula,
    language: &Language,
    max_size: usize,
    budget: Budget,
) -> Result<Option<(FiniteStructure, Assignment)>, SolverError> {
    let mut vars: Vec<Var> = f.free_vars().into_iter().collect();
    for v in g.free_vars() {
        if !vars.contains(&v) {
            assert!(
                !vars.iter().any(|w| w.name == v.name),
                "free variable `{}` has conflicting sorts",
                v.name
            );
            vars.push(v);
        }
    }
    let mut violation = None;
    for sizes in size_vectors(language, max_size) {
        for_each_labeled(language, &sizes, budget, &mut |s| {
            for assignment in assignments_over(s, &vars) {
                let fv = evaluate(s, f, &restrict_to_free(&assignment, f)).expect("well-sorted");
                let gv = evaluate(s, g, &restrict_to_free(&assignment, g)).expect("well-sorted");
                if fv != gv {
                    violation = Some((s.clone(), assignment));
                    return false;
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

/// The disjunction of E♭-formulas as a single formula, for equivalence
/// checking against the flattening input.
pub fn eflat_disjunction(disjuncts: &[EFlatFormula], language: &Language) -> Formula {
    Formula::Or(disjuncts.iter().map(|d| d.to_formula(language)).collect())
}

#[cfg(test)]
mod tests;
