//! Built-in languages, classes, and families used by the CLI, the
//! packaged suites, and the test corpus.
//!
//! Spec references on the command line accept `builtin:<name>` for any
//! class listed by [`class_names`].

use crate::class::ClassSpec;
use crate::logic::{make_language_family, parse_formula, Formula, Language, LanguageFamily};

fn axioms(lang: &Language, texts: &[&str]) -> Vec<Formula> {
    texts
        .iter()
        .map(|t| parse_formula(t, lang).unwrap_or_else(|e| panic!("builtin axiom `{t}`: {e}")))
        .collect()
}

pub fn graph_language() -> Language {
    Language::relational("V", &[("E", 2)])
}

/// Finite simple graphs: `E` symmetric and irreflexive.
pub fn graphs() -> ClassSpec {
    let lang = graph_language();
    let ax = axioms(
        &lang,
        &["forall x: !E(x,x)", "forall x y: E(x,y) -> E(y,x)"],
    );
    ClassSpec::new("graphs", lang, ax, vec![]).unwrap()
}

/// Finite triangle-free graphs.
pub fn triangle_free_graphs() -> ClassSpec {
    let lang = graph_language();
    let ax = axioms(
        &lang,
        &[
            "forall x: !E(x,x)",
            "forall x y: E(x,y) -> E(y,x)",
            "forall x y z: !(E(x,y) & E(y,z) & E(x,z))",
        ],
    );
    ClassSpec::new("triangle-free", lang, ax, vec![]).unwrap()
}

/// Finite tournaments: irreflexive, total, antisymmetric.
pub fn tournaments() -> ClassSpec {
    let lang = graph_language();
    let ax = axioms(
        &lang,
        &[
            "forall x: !E(x,x)",
            "forall x y: !x = y -> (E(x,y) | E(y,x))",
            "forall x y: E(x,y) -> !E(y,x)",
        ],
    );
    ClassSpec::new("tournaments", lang, ax, vec![]).unwrap()
}

/// Equivalence relations all of whose classes have at most two
/// elements. Amalgamation holds, disjoint amalgamation fails.
pub fn bounded_equivalence() -> ClassSpec {
    let lang = graph_language();
    let ax = axioms(
        &lang,
        &[
            "forall x: E(x,x)",
            "forall x y: E(x,y) -> E(y,x)",
            "forall x y z: (E(x,y) & E(y,z)) -> E(x,z)",
            "forall x y z: (E(x,y) & E(x,z) & !x = y & !x = z & !y = z) -> false",
        ],
    );
    ClassSpec::new("bounded-equivalence", lang, ax, vec![]).unwrap()
}

pub fn hypergraph_language() -> Language {
    Language::relational("V", &[("R", 3)])
}

fn hypergraph_axiom_texts() -> Vec<&'static str> {
    vec![
        // Symmetry: the two transpositions generate S3.
        "forall x y z: R(x,y,z) -> R(y,x,z)",
        "forall x y z: R(x,y,z) -> R(x,z,y)",
        // Distinctness of arguments.
        "forall x y z: R(x,y,z) -> (!x = y & !x = z & !y = z)",
    ]
}

/// Finite 3-hypergraphs: `R` symmetric with pairwise-distinct arguments.
pub fn hypergraphs3() -> ClassSpec {
    let lang = hypergraph_language();
    let ax = axioms(&lang, &hypergraph_axiom_texts());
    ClassSpec::new("3-hypergraphs", lang, ax, vec![]).unwrap()
}

pub fn k1_language() -> Language {
    Language::relational("V", &[("R", 3), ("E1", 2)])
}

pub fn k2_language() -> Language {
    Language::relational("V", &[("R", 3), ("E2", 2)])
}

/// Hypergraphs with a graph `E1` whose triangles carry `R`.
pub fn class_k1() -> ClassSpec {
    let lang = k1_language();
    let mut ax = axioms(&lang, &hypergraph_axiom_texts());
    ax.extend(axioms(
        &lang,
        &[
            "forall x: !E1(x,x)",
            "forall x y: E1(x,y) -> E1(y,x)",
            "forall x y z: (E1(x,y) & E1(y,z) & E1(z,x)) -> R(x,y,z)",
        ],
    ));
    ClassSpec::new("K1", lang, ax, vec![]).unwrap()
}

/// Hypergraphs with a graph `E2` whose triangles avoid `R`.
pub fn class_k2() -> ClassSpec {
    let lang = k2_language();
    let mut ax = axioms(&lang, &hypergraph_axiom_texts());
    ax.extend(axioms(
        &lang,
        &[
            "forall x: !E2(x,x)",
            "forall x y: E2(x,y) -> E2(y,x)",
            "forall x y z: (E2(x,y) & E2(y,z) & E2(z,x)) -> !R(x,y,z)",
        ],
    ));
    ClassSpec::new("K2", lang, ax, vec![]).unwrap()
}

pub fn fusion_language() -> Language {
    Language::relational("V", &[("R", 3), ("E1", 2), ("E2", 2)])
}

/// The two-member family `{R,E1}`, `{R,E2}` with intersection `{R}`.
pub fn fusion_family() -> LanguageFamily {
    make_language_family(vec![k1_language(), k2_language()]).unwrap()
}

/// Joint class over the union language: both member classes' axioms.
pub fn fusion_class() -> ClassSpec {
    let lang = fusion_language();
    let mut ax = axioms(&lang, &hypergraph_axiom_texts());
    ax.extend(axioms(
        &lang,
        &[
            "forall x: !E1(x,x)",
            "forall x y: E1(x,y) -> E1(y,x)",
            "forall x y z: (E1(x,y) & E1(y,z) & E1(z,x)) -> R(x,y,z)",
            "forall x: !E2(x,x)",
            "forall x y: E2(x,y) -> E2(y,x)",
            "forall x y z: (E2(x,y) & E2(y,z) & E2(z,x)) -> !R(x,y,z)",
        ],
    ));
    ClassSpec::new("fusion", lang, ax, vec![]).unwrap()
}

pub fn clique_language() -> Language {
    Language::relational("V", &[("E", 2), ("P", 1)])
}

/// Graphs with a predicate naming a clique.
pub fn graphs_with_clique() -> ClassSpec {
    let lang = clique_language();
    let ax = axioms(
        &lang,
        &[
            "forall x: !E(x,x)",
            "forall x y: E(x,y) -> E(y,x)",
            "forall x y: (P(x) & P(y) & !x = y) -> E(x,y)",
        ],
    );
    ClassSpec::new("graphs-clique", lang, ax, vec![]).unwrap()
}

pub fn class_names() -> Vec<&'static str> {
    vec![
        "graphs",
        "triangle-free",
        "tournaments",
        "bounded-equivalence",
        "3-hypergraphs",
        "K1",
        "K2",
        "fusion",
        "graphs-clique",
    ]
}

pub fn class_by_name(name: &str) -> Option<ClassSpec> {
    Some(match name {
        "graphs" => graphs(),
        "triangle-free" => triangle_free_graphs(),
        "tournaments" => tournaments(),
        "bounded-equivalence" => bounded_equivalence(),
        "3-hypergraphs" => hypergraphs3(),
        "K1" => class_k1(),
        "K2" => class_k2(),
        "fusion" => fusion_class(),
        "graphs-clique" => graphs_with_clique(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Budget;
    use crate::structure::enumerate_models;
    use std::collections::BTreeMap;

    #[test]
    fn builtins_construct() {
        for name in class_names() {
            assert!(class_by_name(name).is_some(), "{name}");
        }
        assert!(class_by_name("no-such-class").is_none());
    }

    #[test]
    fn fusion_family_intersection_is_r() {
        let fam = fusion_family();
        assert_eq!(
            fam.intersection().symbols(),
            ["R".to_string()].into_iter().collect()
        );
        assert_eq!(fam.union(), &fusion_language());
    }

    #[test]
    fn hypergraph_counts() {
        let sizes: BTreeMap<String, usize> = [("V".to_string(), 4)].into();
        let reps = enumerate_models(&hypergraphs3(), &sizes, Budget::default()).unwrap();
        // Subsets of the four triples of a 4-set, up to S4: 5.
        assert_eq!(reps.len(), 5);
    }
}
