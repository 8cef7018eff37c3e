use super::*;
use crate::catalog;
use crate::logic::{make_language_family, parse_formula, Language};
use crate::structure::holds_sentence;

fn graph_lang() -> Language {
    Language::relational("V", &[("E", 2)])
}

fn fn_lang() -> Language {
    Language::new(
        vec!["V".into()],
        vec![("R".into(), vec!["V".into()])],
        vec![("f".into(), vec!["V".into()], "V".into())],
        vec![],
    )
    .unwrap()
}

fn flatten(text: &str, lang: &Language) -> Vec<EFlatFormula> {
    let f = parse_formula(text, lang).unwrap();
    flatten_to_eflat(&f, lang, DEFAULT_LITERAL_BUDGET).unwrap()
}

#[test]
fn unary_relation_of_term_hoists_one_witness() {
    let lang = fn_lang();
    let ds = flatten("R(f(x))", &lang);
    assert_eq!(ds.len(), 1);
    assert_eq!(ds[0].witnesses.len(), 1);
    let w = &ds[0].witnesses[0];
    assert_eq!(
        ds[0].body.0,
        vec![
            FlatLiteral::pos(FlatAtom::Func(
                "f".into(),
                vec![Var::new("x", "V")],
                w.clone()
            )),
            FlatLiteral::pos(FlatAtom::Rel("R".into(), vec![w.clone()])),
        ]
    );
    // Equivalence with the input on every structure of size <= 3.
    let input = parse_formula("R(f(x))", &lang).unwrap();
    let output = eflat_disjunction(&ds, &lang);
    assert!(equivalent_up_to_size(&input, &output, &lang, 3, Budget::default())
        .unwrap()
        .is_none());
}

#[test]
fn plain_equality_is_already_flat() {
    let ds = flatten("x = y", &graph_lang());
    assert_eq!(ds.len(), 1);
    assert!(ds[0].witnesses.is_empty());
    assert_eq!(
        ds[0].body.0,
        vec![FlatLiteral::pos(FlatAtom::Eq(
            Var::new("x", "V"),
            Var::new("y", "V")
        ))]
    );
}

#[test]
fn excluded_middle_gives_two_flat_disjuncts() {
    let ds = flatten("E(x,y) | !E(x,y)", &graph_lang());
    assert_eq!(ds.len(), 2);
    for d in &ds {
        assert!(d.witnesses.is_empty());
        assert_eq!(d.body.0.len(), 1);
    }
    assert!(ds[0].body.0[0].positive);
    assert!(!ds[1].body.0[0].positive);
}

#[test]
fn quantified_input_is_rejected() {
    let lang = graph_lang();
    let f = parse_formula("exists y: E(x,y)", &lang).unwrap();
    assert!(matches!(
        flatten_to_eflat(&f, &lang, DEFAULT_LITERAL_BUDGET),
        Err(FlattenError::NotQuantifierFree)
    ));
}

#[test]
fn literal_budget_is_enforced() {
    let lang = graph_lang();
    // CNF of 8 binary disjunctions explodes to 2^8 disjuncts in DNF.
    let big = Formula::And(
        (0..8)
            .map(|i| {
                let x = Term::Var(Var::new(format!("x{i}"), "V"));
                let y = Term::Var(Var::new(format!("y{i}"), "V"));
                Formula::Or(vec![
                    Formula::Rel("E".into(), vec![x.clone(), y.clone()]),
                    Formula::Rel("E".into(), vec![y, x]),
                ])
            })
            .collect(),
    );
    assert!(matches!(
        flatten_to_eflat(&big, &lang, 64),
        Err(FlattenError::LiteralBudget { budget: 64 })
    ));
}

#[test]
fn negated_term_atom_keeps_positive_definitions() {
    let lang = fn_lang();
    let ds = flatten("!R(f(x))", &lang);
    assert_eq!(ds.len(), 1);
    let body = &ds[0].body.0;
    assert!(body[0].positive, "definition literal stays positive");
    assert!(!body[1].positive, "head literal is negated");
    let input = parse_formula("!R(f(x))", &lang).unwrap();
    let output = eflat_disjunction(&ds, &lang);
    assert!(equivalent_up_to_size(&input, &output, &lang, 3, Budget::default())
        .unwrap()
        .is_none());
}

#[test]
fn split_assigns_shared_symbols_to_least_index() {
    let family = catalog::fusion_family();
    let lits = FlatConjunction(vec![
        FlatLiteral::pos(FlatAtom::Rel(
            "E1".into(),
            vec![Var::new("x", "V"), Var::new("y", "V")],
        )),
        FlatLiteral::pos(FlatAtom::Rel(
            "E2".into(),
            vec![Var::new("y", "V"), Var::new("z", "V")],
        )),
        FlatLiteral::pos(FlatAtom::Rel(
            "R".into(),
            vec![Var::new("x", "V"), Var::new("y", "V"), Var::new("z", "V")],
        )),
    ]);
    let parts = split_flat_by_language(&lits, &family).unwrap();
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[&0].0.len(), 2); // E1 and R (R tie-breaks to member 0)
    assert_eq!(parts[&1].0.len(), 1); // E2
    // Re-conjoining is a permutation of the input.
    let mut rejoined: Vec<_> = parts.values().flat_map(|c| c.0.clone()).collect();
    let mut original = lits.0.clone();
    rejoined.sort();
    original.sort();
    assert_eq!(rejoined, original);
}

#[test]
fn split_intersection_only_goes_to_first_member() {
    let family = catalog::fusion_family();
    let lits = FlatConjunction(vec![FlatLiteral::pos(FlatAtom::Rel(
        "R".into(),
        vec![Var::new("x", "V"), Var::new("y", "V"), Var::new("z", "V")],
    ))]);
    let parts = split_flat_by_language(&lits, &family).unwrap();
    assert_eq!(parts.keys().collect::<Vec<_>>(), vec![&0]);
}

#[test]
fn split_empty_conjunction_is_empty_mapping() {
    let family = catalog::fusion_family();
    let parts = split_flat_by_language(&FlatConjunction::default(), &family).unwrap();
    assert!(parts.is_empty());
}

fn k3() -> FiniteStructure {
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

#[test]
fn k3_diagram_has_eighteen_literals() {
    let diagram = flat_diagram(&k3());
    assert_eq!(diagram.len(), 18);
    let eq_pos = diagram
        .iter()
        .filter(|l| l.positive && matches!(l.atom, FlatAtom::Eq(..)))
        .count();
    let eq_neg = diagram
        .iter()
        .filter(|l| !l.positive && matches!(l.atom, FlatAtom::Eq(..)))
        .count();
    let rel_pos = diagram
        .iter()
        .filter(|l| l.positive && matches!(l.atom, FlatAtom::Rel(..)))
        .count();
    let rel_neg = diagram
        .iter()
        .filter(|l| !l.positive && matches!(l.atom, FlatAtom::Rel(..)))
        .count();
    assert_eq!((eq_pos, eq_neg, rel_pos, rel_neg), (3, 6, 6, 3));
}

#[test]
fn single_point_empty_language_diagram() {
    let lang = Language::relational("V", &[]);
    let s = FiniteStructure::relational(lang, &["a"], &[]);
    let diagram = flat_diagram(&s);
    assert_eq!(diagram.len(), 1);
    assert_eq!(
        diagram[0],
        FlatLiteral::pos(FlatAtom::Eq(Var::new("a", "V"), Var::new("a", "V")))
    );
}

#[test]
fn k3_diagram_satisfied_by_k4_inclusion() {
    let k4_edges: Vec<Vec<&str>> = ["a", "b", "c", "d"]
        .iter()
        .flat_map(|x| {
            ["a", "b", "c", "d"]
                .iter()
                .filter(move |y| *y != x)
                .map(move |y| vec![*x, *y])
        })
        .collect();
    let rows: Vec<&[&str]> = k4_edges.iter().map(|r| r.as_slice()).collect();
    let k4 = FiniteStructure::relational(graph_lang(), &["a", "b", "c", "d"], &[("E", &rows)]);
    let diagram = flat_diagram(&k3());
    let inclusion: BTreeMap<String, String> = ["a", "b", "c"]
        .iter()
        .map(|e| (e.to_string(), e.to_string()))
        .collect();
    assert!(satisfies_flat_diagram(&diagram, &k4, &inclusion).unwrap());
    // A non-embedding naming map fails: collapse a and b.
    let collapse: BTreeMap<String, String> = [("a", "a"), ("b", "a"), ("c", "c")]
        .iter()
        .map(|(x, y)| (x.to_string(), y.to_string()))
        .collect();
    assert!(!satisfies_flat_diagram(&diagram, &k4, &collapse).unwrap());
}

#[test]
fn diagram_satisfaction_matches_embedding_search() {
    // Cross-validation over all pairs |A| <= 2, |B| <= 3 of graphs: the
    // diagram is satisfied under a naming map iff the map is an
    // embedding found by find_embeddings.
    let class = catalog::graphs();
    let small = enumerate_members_up_to(&class, 2, Budget::default()).unwrap();
    let hosts = enumerate_members_up_to(&class, 3, Budget::default()).unwrap();
    for a in &small {
        let diagram = flat_diagram(a);
        for b in &hosts {
            let embeddings = crate::structure::find_embeddings(a, b, None);
            // Every embedding satisfies the diagram.
            for e in &embeddings {
                assert!(satisfies_flat_diagram(&diagram, b, e).unwrap());
            }
            // Every injective sort-correct naming map satisfying the
            // diagram is among the embeddings.
            let a_elems: Vec<String> = a.elements().cloned().collect();
            let b_elems: Vec<String> = b.elements().cloned().collect();
            let mut maps: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
            for ae in &a_elems {
                let mut next = Vec::new();
                for m in &maps {
                    for be in &b_elems {
                        if a.sort_of(ae) == b.sort_of(be)
                            && !m.values().any(|v| v == be)
                        {
                            let mut m2 = m.clone();
                            m2.insert(ae.clone(), be.clone());
                            next.push(m2);
                        }
                    }
                }
                maps = next;
            }
            for m in maps {
                let sat = satisfies_flat_diagram(&diagram, b, &m).unwrap();
                assert_eq!(sat, embeddings.contains(&m));
            }
        }
    }
}

#[test]
fn morleyize_adds_defined_neighbor_predicate() {
    let lang = graph_lang();
    let phi = parse_formula("exists y: E(x,y)", &lang).unwrap();
    let result = morleyize(&lang, &[phi]).unwrap();
    assert_eq!(result.definitions.len(), 1);
    let (_, name, vars) = &result.definitions[0];
    assert_eq!(name, "D0");
    assert_eq!(vars.len(), 1);
    assert_eq!(result.axioms.len(), 1);
    let expanded = expand_structure(&result, &k3());
    // Every K3 vertex has a neighbor, so D0 holds everywhere.
    assert_eq!(expanded.relation("D0").unwrap().len(), 3);
    // The canonical expansion satisfies the defining axiom.
    assert!(holds_sentence(&expanded, &result.axioms[0]).unwrap());
}

#[test]
fn morleyize_empty_list_is_identity() {
    let lang = graph_lang();
    let result = morleyize(&lang, &[]).unwrap();
    assert_eq!(result.language, lang);
    assert!(result.axioms.is_empty());
}

#[test]
fn morleyize_rejects_duplicates() {
    let lang = graph_lang();
    let phi = parse_formula("E(x,y)", &lang).unwrap();
    assert!(matches!(
        morleyize(&lang, &[phi.clone(), phi]),
        Err(MorleyError::Duplicate(_))
    ));
}

#[test]
fn morleyized_qf_atom_matches_original_truth_table() {
    let lang = graph_lang();
    let phi = parse_formula("E(x,y) & !E(y,x)", &lang).unwrap();
    let result = morleyize(&lang, &[phi.clone()]).unwrap();
    let (_, name, vars) = &result.definitions[0];
    let atom = Formula::Rel(name.clone(), vars.iter().cloned().map(Term::Var).collect());
    for total in 0..=3usize {
        for sizes in size_vectors(&lang, total) {
            for_each_labeled(&lang, &sizes, Budget::default(), &mut |s| {
                let expanded = expand_structure(&result, s);
                for assignment in assignments_over(s, vars) {
                    let original = evaluate(s, &phi, &assignment).unwrap();
                    let defined = evaluate(&expanded, &atom, &assignment).unwrap();
                    assert_eq!(original, defined);
                }
                true
            })
            .unwrap();
        }
    }
}

#[test]
fn functional_atom_is_bounded_with_one_witness() {
    let lang = Language::new(
        vec!["V".into()],
        vec![],
        vec![("f".into(), vec!["V".into()], "V".into())],
        vec![],
    )
    .unwrap();
    let class = ClassSpec::new("functions", lang.clone(), vec![], vec![]).unwrap();
    let phi = parse_formula("f(x) = y", &lang).unwrap();
    let verdict = check_bounded(
        &phi,
        &[Var::new("y", "V")],
        &class,
        1,
        3,
        Budget::default(),
    )
    .unwrap();
    assert!(matches!(verdict, BoundedVerdict::VerifiedUpToSize(3)));
}

#[test]
fn adjacency_bound_two_is_refuted_by_the_star() {
    let class = catalog::graphs();
    let phi = parse_formula("E(x,y)", class.language()).unwrap();
    let verdict = check_bounded(
        &phi,
        &[Var::new("y", "V")],
        &class,
        2,
        4,
        Budget::default(),
    )
    .unwrap();
    match verdict {
        BoundedVerdict::Refuted {
            structure,
            assignment,
            count,
        } => {
            assert_eq!(count, 3);
            assert_eq!(structure.size(), 4);
            // The witness is the 3-leaf star, refuted at its center.
            assert_eq!(structure.relation("E").unwrap().len(), 6);
            let center = &assignment["x"];
            let degree = structure
                .relation("E")
                .unwrap()
                .iter()
                .filter(|t| &t[0] == center)
                .count();
            assert_eq!(degree, 3);
        }
        other => panic!("expected refutation, got {other:?}"),
    }
}

#[test]
fn equality_is_bounded_by_one() {
    let class = catalog::graphs();
    let phi = parse_formula("x = y", class.language()).unwrap();
    let verdict = check_bounded(
        &phi,
        &[Var::new("y", "V")],
        &class,
        1,
        3,
        Budget::default(),
    )
    .unwrap();
    assert!(matches!(verdict, BoundedVerdict::VerifiedUpToSize(3)));
}

#[test]
fn conjoining_bounds_multiplies() {
    let lang = graph_lang();
    let e = parse_formula("E(x,y)", &lang).unwrap();
    let mk = |bound: usize| BoundedFormula {
        formula: e.clone(),
        witnesses: vec![Var::new("y", "V")],
        bound,
        record: BoundRecord::Declared {
            source: "test".into(),
        },
    };
    assert_eq!(conjoin_bounded(&mk(1), &mk(1)).bound, 1);
    let c = conjoin_bounded(&mk(2), &mk(3));
    assert_eq!(c.bound, 6);
    // Witness tuples were renamed apart.
    assert_eq!(c.witnesses.len(), 2);
    assert_ne!(c.witnesses[0], c.witnesses[1]);
    // Quantifier-free conjunct contributes bound 1.
    let qf = BoundedFormula::quantifier_free(parse_formula("E(x,x)", &lang).unwrap());
    assert_eq!(conjoin_bounded(&qf, &mk(3)).bound, 3);
}

#[test]
fn split_by_singleton_family_keeps_everything_at_zero() {
    let family = make_language_family(vec![graph_lang()]).unwrap();
    let lits = FlatConjunction(vec![FlatLiteral::pos(FlatAtom::Eq(
        Var::new("x", "V"),
        Var::new("y", "V"),
    ))]);
    let parts = split_flat_by_language(&lits, &family).unwrap();
    assert_eq!(parts.keys().collect::<Vec<_>>(), vec![&0]);
}
