//! Enumeration of class members up to isomorphism.
//!
//! Relation tables are enumerated by the clause solver (so axioms prune
//! during search, not after); function tables and constants are
//! enumerated outermost and budget-checked eagerly. Representatives are
//! canonical forms, one per isomorphism class, in deterministic order.

use super::{canonical_form, canonical_key, canonical_name, FiniteStructure};
use crate::class::ClassSpec;
use crate::logic::Language;
use crate::solver::{Budget, GroundProblem, SolverError};
use std::collections::{BTreeMap, BTreeSet};

/// All per-sort size vectors with total in `0..=max_total`, in
/// lexicographic order.
pub fn size_vectors(language: &Language, max_total: usize) -> Vec<BTreeMap<String, usize>> {
    let sorts = language.sorts().to_vec();
    let mut out = Vec::new();
    let mut current: BTreeMap<String, usize> = BTreeMap::new();
    fn rec(
        sorts: &[String],
        idx: usize,
        left: usize,
        current: &mut BTreeMap<String, usize>,
        out: &mut Vec<BTreeMap<String, usize>>,
    ) {
        if idx == sorts.len() {
            out.push(current.clone());
            return;
        }
        for k in 0..=left {
            current.insert(sorts[idx].clone(), k);
            rec(sorts, idx + 1, left - k, current, out);
        }
        current.remove(&sorts[idx]);
    }
    rec(&sorts, 0, max_total, &mut current, &mut out);
    out.sort_by_key(|v| (v.values().sum::<usize>(), v.values().cloned().collect::<Vec<_>>()));
    out
}

fn canonical_carriers(
    language: &Language,
    sizes: &BTreeMap<String, usize>,
) -> BTreeMap<String, Vec<String>> {
    language
        .sorts()
        .iter()
        .enumerate()
        .map(|(idx, sort)| {
            let n = sizes.get(sort).copied().unwrap_or(0);
            (
                sort.clone(),
                (0..n).map(|i| canonical_name(idx, i)).collect(),
            )
        })
        .collect()
}

/// Exactly one canonical representative per isomorphism class of class
/// members with the given per-sort sizes, in deterministic order.
pub fn enumerate_models(
    class: &ClassSpec,
    sizes: &BTreeMap<String, usize>,
    budget: Budget,
) -> Result<Vec<FiniteStructure>, SolverError> {
    let language = class.language();
    let carriers = canonical_carriers(language, sizes);

    // Function tables and constant picks, enumerated outermost.
    let mut function_choices: Vec<(String, Vec<Vec<String>>, Vec<String>)> = Vec::new();
    let mut labeled_tables: u128 = 1;
    for (name, (args, result)) in language.functions() {
        let domain = super::tuples_over(&carriers, args);
        let codomain = carriers.get(result).cloned().unwrap_or_default();
        let count = (codomain.len() as u128).pow(domain.len() as u32);
        labeled_tables = labeled_tables.saturating_mul(count.max(1));
        function_choices.push((name.clone(), domain, codomain));
    }
    for (name, sort) in language.constants() {
        let n = carriers.get(sort).map(|c| c.len()).unwrap_or(0) as u128;
        labeled_tables = labeled_tables.saturating_mul(n.max(1));
        let _ = name;
    }
    if labeled_tables > budget.max_nodes as u128 {
        return Err(SolverError::Budget(budget.max_nodes));
    }

    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut out: Vec<FiniteStructure> = Vec::new();
    let mut visit = |functions: BTreeMap<String, BTreeMap<Vec<String>, String>>,
                     constants: BTreeMap<String, String>|
     -> Result<(), SolverError> {
        // A function into an empty codomain with a nonempty domain has
        // no table at all; skip silently.
        for (name, (args, result)) in class.language().functions() {
            let dom = super::tuples_over(&carriers, args);
            if !dom.is_empty() && carriers.get(result).map(|c| c.is_empty()).unwrap_or(true) {
                return Ok(());
            }
            let _ = name;
        }
        for (name, sort) in class.language().constants() {
            if carriers.get(sort).map(|c| c.is_empty()).unwrap_or(true) {
                return Ok(());
            }
            let _ = name;
        }
        let problem = GroundProblem::new(
            class.language(),
            &carriers,
            &functions,
            &constants,
            class.axioms(),
        )?;
        for candidate in problem.solutions(&BTreeMap::new(), usize::MAX, budget)? {
            if !class.forbidden().is_empty()
                && !class
                    .is_member(&candidate)
                    .expect("membership on enumerated candidate")
            {
                continue;
            }
            let key = canonical_key(&candidate);
            if seen.insert(key) {
                out.push(canonical_form(&candidate).0);
            }
        }
        Ok(())
    };

    // Iterate over the cartesian product of function tables and
    // constant assignments.
    let constant_names: Vec<(String, Vec<String>)> = language
        .constants()
        .iter()
        .map(|(n, sort)| (n.clone(), carriers.get(sort).cloned().unwrap_or_default()))
        .collect();
    let empty_domain_trouble = function_choices
        .iter()
        .any(|(_, dom, cod)| !dom.is_empty() && cod.is_empty())
        || constant_names.iter().any(|(_, c)| c.is_empty());
    if empty_domain_trouble {
        // No total interpretation exists at these sizes.
        return Ok(out);
    }
    let mut table_indices: Vec<Vec<usize>> = function_choices
        .iter()
        .map(|(_, dom, _)| vec![0; dom.len()])
        .collect();
    let mut constant_indices: Vec<usize> = vec![0; constant_names.len()];
    loop {
        let functions: BTreeMap<String, BTreeMap<Vec<String>, String>> = function_choices
            .iter()
            .zip(&table_indices)
            .map(|((name, dom, cod), idx)| {
                (
                    name.clone(),
                    dom.iter()
                        .zip(idx)
                        .map(|(t, &i)| (t.clone(), cod[i].clone()))
                        .collect(),
                )
            })
            .collect();
        let constants: BTreeMap<String, String> = constant_names
            .iter()
            .zip(&constant_indices)
            .map(|((name, c), &i)| (name.clone(), c[i].clone()))
            .collect();
        visit(functions, constants)?;

        // Advance the odometer over all tables and constants.
        let mut advanced = false;
        'outer: {
            for (ti, (_, dom, cod)) in table_indices.iter_mut().zip(&function_choices) {
                for (slot, _) in ti.iter_mut().zip(dom) {
                    *slot += 1;
                    if *slot < cod.len() {
                        advanced = true;
                        break 'outer;
                    }
                    *slot = 0;
                }
            }
            for (slot, (_, c)) in constant_indices.iter_mut().zip(&constant_names) {
                *slot += 1;
                if *slot < c.len() {
                    advanced = true;
                    break 'outer;
                }
                *slot = 0;
            }
        }
        if !advanced {
            break;
        }
    }
    out.sort_by_key(canonical_key);
    Ok(out)
}

/// Visits every labeled structure over `language` with the given
/// per-sort sizes (all relation tables crossed with all function tables
/// and constant picks). The callback returns `false` to stop early.
/// Budget-checked eagerly against the total labeled count.
pub fn for_each_labeled(
    language: &Language,
    sizes: &BTreeMap<String, usize>,
    budget: Budget,
    f: &mut dyn FnMut(&FiniteStructure) -> bool,
) -> Result<(), SolverError> {
    let carriers = canonical_carriers(language, sizes);
    let mut atoms: Vec<(String, Vec<String>)> = Vec::new();
    for (name, profile) in language.relations() {
        for tuple in super::tuples_over(&carriers, profile) {
            atoms.push((name.clone(), tuple));
        }
    }
    let mut count: u128 = if atoms.len() >= 127 {
        u128::MAX
    } else {
        1u128 << atoms.len()
    };
    let mut function_choices: Vec<(String, Vec<Vec<String>>, Vec<String>)> = Vec::new();
    for (name, (args, result)) in language.functions() {
        let domain = super::tuples_over(&carriers, args);
        let codomain = carriers.get(result).cloned().unwrap_or_default();
        if !domain.is_empty() && codomain.is_empty() {
            return Ok(()); // no total interpretation exists
        }
        count = count.saturating_mul((codomain.len() as u128).pow(domain.len() as u32).max(1));
        function_choices.push((name.clone(), domain, codomain));
    }
    let constant_choices: Vec<(String, Vec<String>)> = language
        .constants()
        .iter()
        .map(|(n, sort)| (n.clone(), carriers.get(sort).cloned().unwrap_or_default()))
        .collect();
    for (_, c) in &constant_choices {
        if c.is_empty() {
            return Ok(());
        }
        count = count.saturating_mul(c.len() as u128);
    }
    if count > budget.max_nodes as u128 {
        return Err(SolverError::Budget(budget.max_nodes));
    }

    let mut rel_bits = vec![false; atoms.len()];
    let mut table_indices: Vec<Vec<usize>> = function_choices
        .iter()
        .map(|(_, dom, _)| vec![0; dom.len()])
        .collect();
    let mut constant_indices: Vec<usize> = vec![0; constant_choices.len()];
    loop {
        let mut relations: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
        for (bit, (name, tuple)) in rel_bits.iter().zip(&atoms) {
            if *bit {
                relations
                    .entry(name.clone())
                    .or_default()
                    .insert(tuple.clone());
            }
        }
        let functions: BTreeMap<String, BTreeMap<Vec<String>, String>> = function_choices
            .iter()
            .zip(&table_indices)
            .map(|((name, dom, cod), idx)| {
                (
                    name.clone(),
                    dom.iter()
                        .zip(idx)
                        .map(|(t, &i)| (t.clone(), cod[i].clone()))
                        .collect(),
                )
            })
            .collect();
        let constants: BTreeMap<String, String> = constant_choices
            .iter()
            .zip(&constant_indices)
            .map(|((name, c), &i)| (name.clone(), c[i].clone()))
            .collect();
        let s = FiniteStructure::new(
            language.clone(),
            carriers.clone(),
            relations,
            functions,
            constants,
        )?;
        if !f(&s) {
            return Ok(());
        }
        // Odometer: relation bits, then function tables, then constants.
        let mut advanced = false;
        'adv: {
            for bit in rel_bits.iter_mut() {
                if !*bit {
                    *bit = true;
                    advanced = true;
                    break 'adv;
                }
                *bit = false;
            }
            for (ti, (_, dom, cod)) in table_indices.iter_mut().zip(&function_choices) {
                for (slot, _) in ti.iter_mut().zip(dom) {
                    *slot += 1;
                    if *slot < cod.len() {
                        advanced = true;
                        break 'adv;
                    }
                    *slot = 0;
                }
            }
            for (slot, (_, c)) in constant_indices.iter_mut().zip(&constant_choices) {
                *slot += 1;
                if *slot < c.len() {
                    advanced = true;
                    break 'adv;
                }
                *slot = 0;
            }
        }
        if !advanced {
            return Ok(());
        }
    }
}

/// Representatives of all class members with total size `0..=max_total`.
pub fn enumerate_members_up_to(
    class: &ClassSpec,
    max_total: usize,
    budget: Budget,
) -> Result<Vec<FiniteStructure>, SolverError> {
    let mut out = Vec::new();
    for sizes in size_vectors(class.language(), max_total) {
        out.extend(enumerate_models(class, &sizes, budget)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn graphs() -> ClassSpec {
        let lang = Language::relational("V", &[("E", 2)]);
        ClassSpec::new(
            "graphs",
            lang.clone(),
            vec![
                parse_formula("forall x: !E(x,x)", &lang).unwrap(),
                parse_formula("forall x y: E(x,y) -> E(y,x)", &lang).unwrap(),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn four_graphs_on_three_vertices() {
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 3)].into();
        let reps = enumerate_models(&graphs(), &sizes, Budget::default()).unwrap();
        assert_eq!(reps.len(), 4);
    }

    #[test]
    fn three_triangle_free_graphs_on_three_vertices() {
        let lang = Language::relational("V", &[("E", 2)]);
        let class = ClassSpec::new(
            "triangle-free",
            lang.clone(),
            vec![
                parse_formula("forall x: !E(x,x)", &lang).unwrap(),
                parse_formula("forall x y: E(x,y) -> E(y,x)", &lang).unwrap(),
                parse_formula(
                    "forall x y z: !(E(x,y) & E(y,z) & E(x,z))",
                    &lang,
                )
                .unwrap(),
            ],
            vec![],
        )
        .unwrap();
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 3)].into();
        let reps = enumerate_models(&class, &sizes, Budget::default()).unwrap();
        assert_eq!(reps.len(), 3);
    }

    #[test]
    fn two_tournaments_on_three_vertices() {
        let lang = Language::relational("V", &[("E", 2)]);
        let class = ClassSpec::new(
            "tournaments",
            lang.clone(),
            vec![
                parse_formula("forall x: !E(x,x)", &lang).unwrap(),
                parse_formula("forall x y: !x = y -> (E(x,y) | E(y,x))", &lang).unwrap(),
                parse_formula("forall x y: E(x,y) -> !E(y,x)", &lang).unwrap(),
            ],
            vec![],
        )
        .unwrap();
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 3)].into();
        let reps = enumerate_models(&class, &sizes, Budget::default()).unwrap();
        assert_eq!(reps.len(), 2);
    }

    #[test]
    fn representatives_are_pairwise_non_isomorphic() {
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 4)].into();
        let reps = enumerate_models(&graphs(), &sizes, Budget::default()).unwrap();
        assert_eq!(reps.len(), 11);
        for (i, a) in reps.iter().enumerate() {
            for b in reps.iter().skip(i + 1) {
                assert!(!super::super::embed::isomorphic(a, b));
            }
        }
    }

    #[test]
    fn unary_function_tables_up_to_iso() {
        let lang = Language::new(
            vec!["V".into()],
            vec![],
            vec![("f".into(), vec!["V".into()], "V".into())],
            vec![],
        )
        .unwrap();
        let class = ClassSpec::new("all", lang, vec![], vec![]).unwrap();
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 3)].into();
        let reps = enumerate_models(&class, &sizes, Budget::default()).unwrap();
        // Unary self-maps on 3 points up to conjugation: 7.
        assert_eq!(reps.len(), 7);
    }

    #[test]
    fn budget_guard_trips() {
        let lang = Language::new(
            vec!["V".into()],
            vec![],
            vec![("f".into(), vec!["V".into(), "V".into()], "V".into())],
            vec![],
        )
        .unwrap();
        let class = ClassSpec::new("all", lang, vec![], vec![]).unwrap();
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 5)].into();
        let err = enumerate_models(&class, &sizes, Budget::nodes(1000)).unwrap_err();
        assert!(matches!(err, SolverError::Budget(_)));
    }
}
