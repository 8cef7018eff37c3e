//! Backtracking search for embeddings and automorphisms, plus a
//! brute-force canonical form.
//!
//! An embedding here is strong: it preserves and reflects every
//! relation, commutes with functions, and maps constants to constants.
//! Search order is canonical (source elements in carrier order, target
//! candidates in carrier order), so result lists are deterministic.

use super::FiniteStructure;
use std::collections::{BTreeMap, BTreeSet};

/// Per-element occurrence counts, one per (relation, position). Used to
/// prune candidates: an embedding can only increase these counts.
fn degree_profile(s: &FiniteStructure) -> BTreeMap<String, Vec<usize>> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for (name, profile) in s.language().relations() {
        for i in 0..profile.len() {
            keys.push((name.clone(), i));
        }
    }
    let mut out: BTreeMap<String, Vec<usize>> = s
        .elements()
        .map(|e| (e.clone(), vec![0; keys.len()]))
        .collect();
    for (k, (name, pos)) in keys.iter().enumerate() {
        if let Some(table) = s.relation(name) {
            for tuple in table {
                if let Some(counts) = out.get_mut(&tuple[*pos]) {
                    counts[k] += 1;
                }
            }
        }
    }
    out
}

struct Search<'a> {
    source: &'a FiniteStructure,
    target: &'a FiniteStructure,
    order: Vec<String>,
    src_deg: BTreeMap<String, Vec<usize>>,
    tgt_deg: BTreeMap<String, Vec<usize>>,
    results: Vec<BTreeMap<String, String>>,
}

impl Search<'_> {
    fn consistent(&self, map: &BTreeMap<String, String>, just_added: &str) -> bool {
        let mapped = |e: &String| map.get(e);
        // Relation tuples that are now fully mapped must agree in both
        // directions.
        for (name, table) in self.source.relations() {
            let profile = self.source.language().relation_profile(name).unwrap();
            for tuple in super::tuples_over(self.source.carriers(), profile) {
                if !tuple.iter().any(|e| e == just_added) {
                    continue;
                }
                let image: Option<Vec<String>> =
                    tuple.iter().map(|e| mapped(e).cloned()).collect();
                if let Some(image) = image {
                    if table.contains(&tuple) != self.target.holds(name, &image) {
                        return false;
                    }
                }
            }
        }
        // Functions must commute whenever arguments and value are mapped.
        for (name, ftable) in self.source.functions() {
            for (args, value) in ftable {
                if !args.iter().any(|e| e == just_added) && value != just_added {
                    continue;
                }
                let image_args: Option<Vec<String>> =
                    args.iter().map(|e| mapped(e).cloned()).collect();
                if let (Some(image_args), Some(image_value)) = (image_args, mapped(value)) {
                    match self.target.apply(name, &image_args) {
                        Some(v) if v == image_value => {}
                        _ => return false,
                    }
                }
            }
        }
        true
    }

    fn dfs(&mut self, idx: usize, map: &mut BTreeMap<String, String>, used: &mut BTreeSet<String>) {
        if idx == self.order.len() {
            self.results.push(map.clone());
            return;
        }
        let e = self.order[idx].clone();
        if let Some(t) = map.get(&e).cloned() {
            // Pre-seeded by the partial map or by constants.
            if self.consistent(map, &e) && used.contains(&t) {
                self.dfs(idx + 1, map, used);
            }
            return;
        }
        let sort = self.source.sort_of(&e).unwrap().clone();
        let src_counts = self.src_deg.get(&e).cloned().unwrap_or_default();
        for t in self.target.carrier(&sort).to_vec() {
            if used.contains(&t) {
                continue;
            }
            let tgt_counts = self.tgt_deg.get(&t).cloned().unwrap_or_default();
            if src_counts
                .iter()
                .zip(&tgt_counts)
                .any(|(s, t)| s > t)
            {
                continue;
            }
            map.insert(e.clone(), t.clone());
            used.insert(t.clone());
            if self.consistent(map, &e) {
                self.dfs(idx + 1, map, used);
            }
            map.remove(&e);
            used.remove(&t);
        }
    }
}

/// All embeddings of `source` into `target` extending `partial`, in
/// canonical order. The partial map must be injective and sort-correct;
/// otherwise the result is simply empty.
pub fn find_embeddings(
    source: &FiniteStructure,
    target: &FiniteStructure,
    partial: Option<&BTreeMap<String, String>>,
) -> Vec<BTreeMap<String, String>> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    if let Some(p) = partial {
        for (a, b) in p {
            if !source.contains_element(a)
                || source.sort_of(a) != target.sort_of(b)
                || !used.insert(b.clone())
            {
                return Vec::new();
            }
            map.insert(a.clone(), b.clone());
        }
    }
    // Constants determine part of the map up front.
    for (name, a) in source.constants() {
        let b = match target.constants().get(name) {
            Some(b) => b.clone(),
            None => return Vec::new(),
        };
        match map.get(a) {
            Some(existing) if *existing != b => return Vec::new(),
            Some(_) => {}
            None => {
                if !used.insert(b.clone()) {
                    return Vec::new();
                }
                map.insert(a.clone(), b);
            }
        }
    }
    let order: Vec<String> = source.elements().cloned().collect();
    let mut search = Search {
        source,
        target,
        order,
        src_deg: degree_profile(source),
        tgt_deg: degree_profile(target),
        results: Vec::new(),
    };
    // Values seeded before the search still need a consistency pass,
    // which `dfs` performs element by element.
    search.dfs(0, &mut map, &mut used);
    search.results
}

/// The automorphisms of a structure fixing a subset pointwise.
#[derive(Debug, Clone)]
pub struct AutomorphismSet {
    pub fixed: BTreeSet<String>,
    pub maps: Vec<BTreeMap<String, String>>,
}

impl AutomorphismSet {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Orbit partition on `arity`-tuples of elements. Tuples in one
    /// orbit share a representative (the least tuple of the orbit).
    pub fn orbits(
        &self,
        structure: &FiniteStructure,
        arity: usize,
    ) -> BTreeMap<Vec<String>, Vec<String>> {
        let elems: Vec<String> = structure.elements().cloned().collect();
        let mut tuples = vec![Vec::new()];
        for _ in 0..arity {
            let mut next = Vec::new();
            for t in &tuples {
                for e in &elems {
                    let mut t2 = t.clone();
                    t2.push(e.clone());
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let mut repr: BTreeMap<Vec<String>, Vec<String>> = BTreeMap::new();
        for t in tuples {
            let least = self
                .maps
                .iter()
                .map(|m| t.iter().map(|e| m[e].clone()).collect::<Vec<_>>())
                .min()
                .unwrap_or_else(|| t.clone());
            repr.insert(t, least);
        }
        repr
    }
}

/// Complete automorphism list (desk scale) fixing `fixed` pointwise.
pub fn automorphisms(structure: &FiniteStructure, fixed: &BTreeSet<String>) -> AutomorphismSet {
    let partial: BTreeMap<String, String> =
        fixed.iter().map(|e| (e.clone(), e.clone())).collect();
    let maps = find_embeddings(structure, structure, Some(&partial));
    AutomorphismSet {
        fixed: fixed.clone(),
        maps,
    }
}

fn per_sort_permutations(sizes: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        let mut items: Vec<usize> = (0..n).collect();
        permute(&mut items, 0, &mut out);
        out.sort();
        out
    }
    fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, out);
            items.swap(k, i);
        }
    }
    sizes.iter().map(|&n| perms(n)).collect()
}

/// Deterministic key identifying the isomorphism class of a structure:
/// the lexicographically least serialization of all tables over every
/// product of per-sort carrier permutations. Exact search; intended for
/// carriers of at most a handful of elements per sort.
pub fn canonical_key(s: &FiniteStructure) -> Vec<u8> {
    canonical_inner(s).0
}

/// Canonical representative: elements renamed to `{prefix}{i}` in the
/// key-minimizing order, where the prefix is `a`, `b`, ... per sort.
/// Also returns the original-to-canonical renaming.
pub fn canonical_form(s: &FiniteStructure) -> (FiniteStructure, BTreeMap<String, String>) {
    let (_, slot_of) = canonical_inner(s);
    let rename: BTreeMap<String, String> = slot_of
        .iter()
        .map(|(e, (sort_idx, slot))| (e.clone(), canonical_name(*sort_idx, *slot)))
        .collect();
    let canon = s.rename(&rename);
    (canon, rename)
}

pub(crate) fn canonical_name(sort_idx: usize, slot: usize) -> String {
    let letter = (b'a' + (sort_idx % 26) as u8) as char;
    format!("{letter}{slot}")
}

fn canonical_inner(s: &FiniteStructure) -> (Vec<u8>, BTreeMap<String, (usize, usize)>) {
    let sorts = s.language().sorts().to_vec();
    let carriers: Vec<Vec<String>> = sorts.iter().map(|x| s.carrier(x).to_vec()).collect();
    let sizes: Vec<usize> = carriers.iter().map(|c| c.len()).collect();
    let sort_index: BTreeMap<&String, usize> =
        sorts.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let elem_pos: BTreeMap<&String, (usize, usize)> = carriers
        .iter()
        .enumerate()
        .flat_map(|(si, c)| c.iter().enumerate().map(move |(i, e)| (e, (si, i))))
        .collect();
    let perm_sets = per_sort_permutations(&sizes);

    let mut best: Option<(Vec<u8>, Vec<Vec<usize>>)> = None;
    let mut indices = vec![0usize; perm_sets.len()];
    loop {
        let perm: Vec<&Vec<usize>> = indices
            .iter()
            .enumerate()
            .map(|(i, &k)| &perm_sets[i][k])
            .collect();
        // slot(e) = perm[sort][original position of e]
        let slot = |e: &String| -> usize {
            let (si, i) = elem_pos[e];
            perm[si][i]
        };
        let mut key: Vec<u8> = Vec::new();
        for (name, profile) in s.language().relations() {
            key.extend(name.as_bytes());
            key.push(b'=');
            // Bit per slot-tuple in lex order.
            let mut slot_tuples = vec![Vec::new()];
            for sort in profile {
                let n = sizes[sort_index[sort]];
                let mut next = Vec::new();
                for t in &slot_tuples {
                    for k in 0..n {
                        let mut t2: Vec<usize> = t.clone();
                        t2.push(k);
                        next.push(t2);
                    }
                }
                slot_tuples = next;
            }
            // Membership lookup via inverse permutation per position.
            let inv: Vec<Vec<usize>> = perm
                .iter()
                .map(|p| {
                    let mut inv = vec![0; p.len()];
                    for (i, &v) in p.iter().enumerate() {
                        inv[v] = i;
                    }
                    inv
                })
                .collect();
            let table = s.relation(name).unwrap();
            for st in &slot_tuples {
                let orig: Vec<String> = st
                    .iter()
                    .zip(profile)
                    .map(|(&k, sort)| {
                        let si = sort_index[sort];
                        carriers[si][inv[si][k]].clone()
                    })
                    .collect();
                key.push(if table.contains(&orig) { b'1' } else { b'0' });
            }
            key.push(b';');
        }
        for (name, table) in s.functions() {
            key.extend(name.as_bytes());
            key.push(b'=');
            let mut rows: Vec<(Vec<usize>, usize)> = table
                .iter()
                .map(|(args, v)| (args.iter().map(&slot).collect(), slot(v)))
                .collect();
            rows.sort();
            for (args, v) in rows {
                for a in args {
                    key.extend(a.to_string().as_bytes());
                    key.push(b',');
                }
                key.push(b'>');
                key.extend(v.to_string().as_bytes());
                key.push(b' ');
            }
            key.push(b';');
        }
        for (name, e) in s.constants() {
            key.extend(name.as_bytes());
            key.push(b'=');
            key.extend(slot(e).to_string().as_bytes());
            key.push(b';');
        }
        let owned: Vec<Vec<usize>> = perm.into_iter().cloned().collect();
        match &best {
            None => best = Some((key, owned)),
            Some((b, _)) if key < *b => best = Some((key, owned)),
            _ => {}
        }
        // Advance the per-sort permutation indices.
        let mut i = 0;
        loop {
            if i == indices.len() {
                let (key, perm) = best.unwrap();
                let slot_of = elem_pos
                    .iter()
                    .map(|(e, (si, k))| ((*e).clone(), (*si, perm[*si][*k])))
                    .collect();
                return (key, slot_of);
            }
            indices[i] += 1;
            if indices[i] < perm_sets[i].len() {
                break;
            }
            indices[i] = 0;
            i += 1;
        }
    }
}

/// Are two structures over the same language isomorphic?
pub fn isomorphic(a: &FiniteStructure, b: &FiniteStructure) -> bool {
    if a.language() != b.language() {
        return false;
    }
    for sort in a.language().sorts() {
        if a.carrier(sort).len() != b.carrier(sort).len() {
            return false;
        }
    }
    canonical_key(a) == canonical_key(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Language;

    fn graph_lang() -> Language {
        Language::relational("V", &[("E", 2)])
    }

    fn triangle() -> FiniteStructure {
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

    fn path3() -> FiniteStructure {
        FiniteStructure::relational(
            graph_lang(),
            &["a", "b", "c"],
            &[("E", &[&["a", "b"], &["b", "a"], &["b", "c"], &["c", "b"]])],
        )
    }

    fn edge() -> FiniteStructure {
        FiniteStructure::relational(graph_lang(), &["u", "v"], &[("E", &[&["u", "v"], &["v", "u"]])])
    }

    #[test]
    fn edge_into_triangle_has_six_embeddings() {
        assert_eq!(find_embeddings(&edge(), &triangle(), None).len(), 6);
    }

    #[test]
    fn no_triangle_in_a_path() {
        assert!(find_embeddings(&triangle(), &path3(), None).is_empty());
    }

    #[test]
    fn full_partial_map_forces_identity_check() {
        let id: BTreeMap<String, String> = ["a", "b", "c"]
            .iter()
            .map(|e| (e.to_string(), e.to_string()))
            .collect();
        assert_eq!(find_embeddings(&path3(), &path3(), Some(&id)).len(), 1);
        let swapped: BTreeMap<String, String> = [("a", "b"), ("b", "a"), ("c", "c")]
            .iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert!(find_embeddings(&path3(), &path3(), Some(&swapped)).is_empty());
    }

    #[test]
    fn triangle_has_six_automorphisms() {
        assert_eq!(automorphisms(&triangle(), &BTreeSet::new()).len(), 6);
    }

    #[test]
    fn path_has_reflection_only() {
        let auts = automorphisms(&path3(), &BTreeSet::new());
        assert_eq!(auts.len(), 2);
        let fixed = automorphisms(&path3(), &["a".to_string()].into());
        assert_eq!(fixed.len(), 1);
    }

    #[test]
    fn automorphisms_closed_under_composition_and_inverse() {
        let auts = automorphisms(&path3(), &BTreeSet::new());
        for f in &auts.maps {
            for g in &auts.maps {
                let comp: BTreeMap<String, String> =
                    f.iter().map(|(x, y)| (x.clone(), g[y].clone())).collect();
                assert!(auts.maps.contains(&comp));
            }
            let inv: BTreeMap<String, String> =
                f.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
            assert!(auts.maps.contains(&inv));
        }
        let id: BTreeMap<String, String> = path3()
            .elements()
            .map(|e| (e.clone(), e.clone()))
            .collect();
        assert!(auts.maps.contains(&id));
    }

    #[test]
    fn canonical_key_identifies_isomorphs() {
        let relabeled = FiniteStructure::relational(
            graph_lang(),
            &["x", "y", "z"],
            &[("E", &[&["y", "x"], &["x", "y"], &["x", "z"], &["z", "x"]])],
        );
        assert!(isomorphic(&path3(), &relabeled));
        assert!(!isomorphic(&path3(), &triangle()));
    }

    #[test]
    fn orbit_partition_on_path() {
        let auts = automorphisms(&path3(), &BTreeSet::new());
        let orbits = auts.orbits(&path3(), 1);
        // a and c swap; b is fixed.
        assert_eq!(orbits[&vec!["a".to_string()]], vec!["a".to_string()]);
        assert_eq!(orbits[&vec!["c".to_string()]], vec!["a".to_string()]);
        assert_eq!(orbits[&vec!["b".to_string()]], vec!["b".to_string()]);
    }
}
