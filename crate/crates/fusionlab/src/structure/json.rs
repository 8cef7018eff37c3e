//! The JSON structure format.
//!
//! ```json
//! {
//!   "sorts": {"V": ["a", "b"]},
//!   "relations": {"E": [["a", "b"], ["b", "a"]]},
//!   "functions": {"f": {"a": "b", "b": "b"}},
//!   "constants": {"c": "a"}
//! }
//! ```
//!
//! Function keys join argument tuples with commas, so element names
//! must not contain commas. Tuple order is significant.

use super::{FiniteStructure, StructureError};
use crate::logic::Language;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("element name `{0}` contains a comma")]
    CommaInName(String),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureJson {
    pub sorts: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
}

impl StructureJson {
    pub fn from_structure(s: &FiniteStructure) -> Self {
        StructureJson {
            sorts: s.carriers().clone(),
            relations: s
                .relations()
                .iter()
                .filter(|(_, t)| !t.is_empty())
                .map(|(n, t)| (n.clone(), t.iter().cloned().collect()))
                .collect(),
            functions: s
                .functions()
                .iter()
                .filter(|(_, t)| !t.is_empty())
                .map(|(n, t)| {
                    (
                        n.clone(),
                        t.iter().map(|(args, v)| (args.join(","), v.clone())).collect(),
                    )
                })
                .collect(),
            constants: s.constants().clone(),
        }
    }

    pub fn into_structure(self, language: &Language) -> Result<FiniteStructure, JsonError> {
        for es in self.sorts.values() {
            for e in es {
                if e.contains(',') && !self.functions.is_empty() {
                    return Err(JsonError::CommaInName(e.clone()));
                }
            }
        }
        let relations: BTreeMap<String, BTreeSet<Vec<String>>> = self
            .relations
            .into_iter()
            .map(|(n, t)| (n, t.into_iter().collect()))
            .collect();
        let functions: BTreeMap<String, BTreeMap<Vec<String>, String>> = self
            .functions
            .into_iter()
            .map(|(n, t)| {
                (
                    n,
                    t.into_iter()
                        .map(|(k, v)| {
                            let args = if k.is_empty() {
                                Vec::new()
                            } else {
                                k.split(',').map(|s| s.to_string()).collect()
                            };
                            (args, v)
                        })
                        .collect(),
                )
            })
            .collect();
        Ok(FiniteStructure::new(
            language.clone(),
            self.sorts,
            relations,
            functions,
            self.constants,
        )?)
    }
}

/// Serializes a structure in the workbench JSON format (pretty, with
/// sorted keys, so output is deterministic).
pub fn to_json_string(s: &FiniteStructure) -> String {
    serde_json::to_string_pretty(&StructureJson::from_structure(s)).expect("structure serializes")
}

/// Parses a structure from the workbench JSON format, validating it
/// against the given language.
pub fn from_json_str(text: &str, language: &Language) -> Result<FiniteStructure, JsonError> {
    let raw: StructureJson = serde_json::from_str(text)?;
    raw.into_structure(language)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let lang = Language::new(
            vec!["V".into()],
            vec![("E".into(), vec!["V".into(), "V".into()])],
            vec![("f".into(), vec!["V".into()], "V".into())],
            vec![("c".into(), "V".into())],
        )
        .unwrap();
        let s = FiniteStructure::new(
            lang.clone(),
            [("V".to_string(), vec!["a".into(), "b".into()])].into(),
            [("E".to_string(), [vec!["a".to_string(), "b".to_string()]].into())].into(),
            [(
                "f".to_string(),
                [
                    (vec!["a".to_string()], "b".to_string()),
                    (vec!["b".to_string()], "b".to_string()),
                ]
                .into(),
            )]
            .into(),
            [("c".to_string(), "a".to_string())].into(),
        )
        .unwrap();
        let text = to_json_string(&s);
        let back = from_json_str(&text, &lang).unwrap();
        assert_eq!(s, back);
    }
}
