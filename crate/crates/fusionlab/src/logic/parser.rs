//! Parser for the workbench formula grammar.
//!
//! Grammar sketch: `forall`/`exists` binders terminated by `:`,
//! connectives `&`, `|`, `!`, `->` (desugared to `!a | b`), atoms
//! `R(t,...)` and `t1 = t2`, keywords `true`/`false`. Variables match
//! `[a-z][a-zA-Z0-9]*` and need not be declared; every other identifier
//! must be declared in the language. Binders may annotate sorts
//! (`forall x: V: ...`); sorts of unannotated variables are inferred
//! from symbol profiles, with the unique sort as fallback in
//! single-sorted languages.

use super::{Formula, Language, Term, Var};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared symbol `{name}` at byte {pos}")]
    UndeclaredSymbol { pos: usize, name: String },
    #[error("`{name}` expects {expected} argument(s), got {got} (at byte {pos})")]
    ArityMismatch {
        pos: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("sort mismatch for variable `{name}`: used as both `{first}` and `{second}`")]
    SortMismatch {
        name: String,
        first: String,
        second: String,
    },
    #[error("sort of `{0}` cannot be inferred; annotate it (multi-sorted language)")]
    CannotInfer(String),
    #[error("equation relates terms of sorts `{0}` and `{1}`")]
    EquationSortMismatch(String, String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Eq,
    Amp,
    Pipe,
    Bang,
    Arrow,
    Forall,
    Exists,
    True,
    False,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            ':' => {
                toks.push((Tok::Colon, i));
                i += 1;
            }
            '=' => {
                toks.push((Tok::Eq, i));
                i += 1;
            }
            '&' => {
                toks.push((Tok::Amp, i));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, i));
                i += 1;
            }
            '!' => {
                toks.push((Tok::Bang, i));
                i += 1;
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Arrow, i));
                    i += 2;
                } else {
                    return Err(ParseError::Syntax {
                        pos: i,
                        msg: "expected `->`".into(),
                    });
                }
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push((tok, start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

fn is_variable_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric())
}

// Unresolved AST: variables carry occurrence slots instead of sorts.
#[derive(Debug, Clone)]
enum RTerm {
    Var(String, usize),
    Const(String),
    App(String, Vec<RTerm>),
}

#[derive(Debug, Clone)]
enum RFormula {
    Eq(RTerm, RTerm),
    Rel(String, Vec<RTerm>),
    Not(Box<RFormula>),
    And(Vec<RFormula>),
    Or(Vec<RFormula>),
    Exists(Vec<(String, usize)>, Box<RFormula>),
    Forall(Vec<(String, usize)>, Box<RFormula>),
}

struct Slots {
    // slot -> resolved sort, if any
    sorts: Vec<Option<String>>,
    // union-find parent
    parent: Vec<usize>,
    names: Vec<String>,
}

impl Slots {
    fn new() -> Self {
        Slots {
            sorts: Vec::new(),
            parent: Vec::new(),
            names: Vec::new(),
        }
    }

    fn fresh(&mut self, name: &str) -> usize {
        self.sorts.push(None);
        self.parent.push(self.sorts.len() - 1);
        self.names.push(name.to_string());
        self.sorts.len() - 1
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let r = self.find(self.parent[i]);
            self.parent[i] = r;
        }
        self.parent[i]
    }

    fn assign(&mut self, i: usize, sort: &str) -> Result<(), ParseError> {
        let r = self.find(i);
        match &self.sorts[r] {
            Some(s) if s != sort => Err(ParseError::SortMismatch {
                name: self.names[r].clone(),
                first: s.clone(),
                second: sort.to_string(),
            }),
            _ => {
                self.sorts[r] = Some(sort.to_string());
                Ok(())
            }
        }
    }

    fn union(&mut self, i: usize, j: usize) -> Result<(), ParseError> {
        let (ri, rj) = (self.find(i), self.find(j));
        if ri == rj {
            return Ok(());
        }
        match (self.sorts[ri].clone(), self.sorts[rj].clone()) {
            (Some(a), Some(b)) if a != b => Err(ParseError::EquationSortMismatch(a, b)),
            (Some(a), _) => {
                self.parent[rj] = ri;
                self.sorts[ri] = Some(a);
                Ok(())
            }
            (None, b) => {
                self.parent[ri] = rj;
                self.sorts[rj] = b;
                Ok(())
            }
        }
    }

    fn resolved(&mut self, i: usize, language: &Language) -> Result<String, ParseError> {
        let r = self.find(i);
        match &self.sorts[r] {
            Some(s) => Ok(s.clone()),
            None => match language.default_sort() {
                Some(s) => Ok(s.to_string()),
                None => Err(ParseError::CannotInfer(self.names[r].clone())),
            },
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    language: &'a Language,
    slots: Slots,
    // lexical scope: variable name -> stack of slots
    scope: BTreeMap<String, Vec<usize>>,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos: self.here(),
                msg: format!("expected {what}"),
            })
        }
    }

    fn slot_for(&mut self, name: &str) -> usize {
        if let Some(stack) = self.scope.get(name) {
            if let Some(&s) = stack.last() {
                return s;
            }
        }
        // Free variable: one shared slot per name.
        let key = format!("\u{0}free:{name}");
        if let Some(stack) = self.scope.get(&key) {
            if let Some(&s) = stack.last() {
                return s;
            }
        }
        let s = self.slots.fresh(name);
        self.scope.entry(key).or_default().push(s);
        s
    }

    // formula := implication (right-assoc `->` desugared on the spot)
    fn formula(&mut self) -> Result<RFormula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.formula()?;
            Ok(RFormula::Or(vec![RFormula::Not(Box::new(lhs)), rhs]))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<RFormula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RFormula::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<RFormula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RFormula::And(parts)
        })
    }

    fn unary(&mut self) -> Result<RFormula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(RFormula::Not(Box::new(self.unary()?)))
            }
            Some(Tok::Forall) | Some(Tok::Exists) => self.quantified(),
            Some(Tok::LParen) => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::True) => {
                self.bump();
                Ok(RFormula::And(vec![]))
            }
            Some(Tok::False) => {
                self.bump();
                Ok(RFormula::Or(vec![]))
            }
            _ => self.atom(),
        }
    }

    fn quantified(&mut self) -> Result<RFormula, ParseError> {
        let existential = matches!(self.bump(), Some(Tok::Exists));
        let mut binders: Vec<(String, usize, Option<String>)> = Vec::new();
        loop {
            let pos = self.here();
            match self.bump() {
                Some(Tok::Ident(name)) if is_variable_name(&name) => {
                    // An annotation `: Sort` binds to the variable only when
                    // the identifier after the colon is a declared sort; the
                    // final colon before the body never is.
                    let mut annot = None;
                    if self.peek() == Some(&Tok::Colon) {
                        if let Some(Tok::Ident(s)) = self.peek2() {
                            if self.language.has_sort(s) {
                                let s = s.clone();
                                self.bump();
                                self.bump();
                                annot = Some(s);
                            }
                        }
                    }
                    binders.push((name, 0, annot));
                    if self.peek() == Some(&Tok::Comma) {
                        self.bump();
                        continue;
                    }
                    if self.peek() == Some(&Tok::Colon) {
                        self.bump();
                        break;
                    }
                }
                Some(Tok::Ident(name)) => {
                    return Err(ParseError::Syntax {
                        pos,
                        msg: format!("`{name}` is not a valid variable name"),
                    })
                }
                _ => {
                    return Err(ParseError::Syntax {
                        pos,
                        msg: "expected a bound variable".into(),
                    })
                }
            }
        }
        if binders.is_empty() {
            return Err(ParseError::Syntax {
                pos: self.here(),
                msg: "quantifier binds no variables".into(),
            });
        }
        for b in &mut binders {
            let slot = self.slots.fresh(&b.0);
            if let Some(sort) = &b.2 {
                self.slots.assign(slot, sort)?;
            }
            self.scope.entry(b.0.clone()).or_default().push(slot);
            b.1 = slot;
        }
        let body = self.formula()?;
        for b in &binders {
            self.scope.get_mut(&b.0).unwrap().pop();
        }
        let vs = binders.into_iter().map(|(n, s, _)| (n, s)).collect();
        Ok(if existential {
            RFormula::Exists(vs, Box::new(body))
        } else {
            RFormula::Forall(vs, Box::new(body))
        })
    }

    fn atom(&mut self) -> Result<RFormula, ParseError> {
        let pos = self.here();
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                if self.language.relation_profile(&name).is_some() {
                    self.bump();
                    let args = self.arg_list()?;
                    let profile = self.language.relation_profile(&name).unwrap().clone();
                    if args.len() != profile.len() {
                        return Err(ParseError::ArityMismatch {
                            pos,
                            name,
                            expected: profile.len(),
                            got: args.len(),
                        });
                    }
                    for (a, sort) in args.iter().zip(&profile) {
                        self.constrain_term(a, sort)?;
                    }
                    return Ok(RFormula::Rel(name, args));
                }
                // Otherwise this must start a term equation.
                let lhs = self.term()?;
                self.expect(Tok::Eq, "`=`")?;
                let rhs = self.term()?;
                self.unify_terms(&lhs, &rhs)?;
                Ok(RFormula::Eq(lhs, rhs))
            }
            _ => Err(ParseError::Syntax {
                pos,
                msg: "expected an atom".into(),
            }),
        }
    }

    fn arg_list(&mut self) -> Result<Vec<RTerm>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() != Some(&Tok::RParen) {
            loop {
                args.push(self.term()?);
                if self.peek() == Some(&Tok::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(args)
    }

    fn term(&mut self) -> Result<RTerm, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Ident(name)) => {
                if let Some((args_profile, _)) = self.language.function_profile(&name).cloned() {
                    let args = self.arg_list()?;
                    if args.len() != args_profile.len() {
                        return Err(ParseError::ArityMismatch {
                            pos,
                            name,
                            expected: args_profile.len(),
                            got: args.len(),
                        });
                    }
                    for (a, sort) in args.iter().zip(&args_profile) {
                        self.constrain_term(a, sort)?;
                    }
                    Ok(RTerm::App(name, args))
                } else if self.language.constant_sort(&name).is_some() {
                    Ok(RTerm::Const(name))
                } else if is_variable_name(&name) {
                    if self.peek() == Some(&Tok::LParen) {
                        return Err(ParseError::UndeclaredSymbol { pos, name });
                    }
                    let slot = self.slot_for(&name);
                    Ok(RTerm::Var(name, slot))
                } else {
                    Err(ParseError::UndeclaredSymbol { pos, name })
                }
            }
            _ => Err(ParseError::Syntax {
                pos,
                msg: "expected a term".into(),
            }),
        }
    }

    fn term_sort(&self, t: &RTerm) -> Option<String> {
        match t {
            RTerm::Var(..) => None,
            RTerm::Const(c) => self.language.constant_sort(c).cloned(),
            RTerm::App(f, _) => self.language.function_profile(f).map(|(_, r)| r.clone()),
        }
    }

    fn constrain_term(&mut self, t: &RTerm, sort: &str) -> Result<(), ParseError> {
        match t {
            RTerm::Var(_, slot) => self.slots.assign(*slot, sort),
            RTerm::Const(c) => {
                let s = self.language.constant_sort(c).unwrap();
                if s == sort {
                    Ok(())
                } else {
                    Err(ParseError::EquationSortMismatch(s.clone(), sort.into()))
                }
            }
            RTerm::App(f, _) => {
                let s = &self.language.function_profile(f).unwrap().1;
                if s == sort {
                    Ok(())
                } else {
                    Err(ParseError::EquationSortMismatch(s.clone(), sort.into()))
                }
            }
        }
    }

    fn unify_terms(&mut self, l: &RTerm, r: &RTerm) -> Result<(), ParseError> {
        match (self.term_sort(l), self.term_sort(r)) {
            (Some(a), Some(b)) => {
                if a == b {
                    Ok(())
                } else {
                    Err(ParseError::EquationSortMismatch(a, b))
                }
            }
            (Some(a), None) => self.constrain_term(r, &a),
            (None, Some(b)) => self.constrain_term(l, &b),
            (None, None) => match (l, r) {
                (RTerm::Var(_, i), RTerm::Var(_, j)) => self.slots.union(*i, *j),
                _ => unreachable!("sortless terms are variables"),
            },
        }
    }

    fn resolve_term(&mut self, t: &RTerm) -> Result<Term, ParseError> {
        Ok(match t {
            RTerm::Var(name, slot) => {
                let sort = self.slots.resolved(*slot, self.language)?;
                Term::Var(Var::new(name.clone(), sort))
            }
            RTerm::Const(c) => Term::Const(c.clone()),
            RTerm::App(f, args) => Term::App(
                f.clone(),
                args.iter()
                    .map(|a| self.resolve_term(a))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    fn resolve(&mut self, f: &RFormula) -> Result<Formula, ParseError> {
        Ok(match f {
            RFormula::Eq(l, r) => Formula::Eq(self.resolve_term(l)?, self.resolve_term(r)?),
            RFormula::Rel(name, args) => Formula::Rel(
                name.clone(),
                args.iter()
                    .map(|a| self.resolve_term(a))
                    .collect::<Result<_, _>>()?,
            ),
            RFormula::Not(g) => self.resolve(g)?.not(),
            RFormula::And(gs) => Formula::And(
                gs.iter()
                    .map(|g| self.resolve(g))
                    .collect::<Result<_, _>>()?,
            ),
            RFormula::Or(gs) => Formula::Or(
                gs.iter()
                    .map(|g| self.resolve(g))
                    .collect::<Result<_, _>>()?,
            ),
            RFormula::Exists(vs, g) => {
                let vars = vs
                    .iter()
                    .map(|(n, s)| {
                        Ok(Var::new(n.clone(), self.slots.resolved(*s, self.language)?))
                    })
                    .collect::<Result<_, ParseError>>()?;
                Formula::Exists(vars, Box::new(self.resolve(g)?))
            }
            RFormula::Forall(vs, g) => {
                let vars = vs
                    .iter()
                    .map(|(n, s)| {
                        Ok(Var::new(n.clone(), self.slots.resolved(*s, self.language)?))
                    })
                    .collect::<Result<_, ParseError>>()?;
                Formula::Forall(vars, Box::new(self.resolve(g)?))
            }
        })
    }
}

/// Parses a formula over `language`. Pretty-printing the result with
/// [`Formula::display_in`] re-parses to a structurally identical AST.
pub fn parse_formula(text: &str, language: &Language) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        language,
        slots: Slots::new(),
        scope: BTreeMap::new(),
        end: text.len(),
    };
    let raw = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.here(),
            msg: "trailing input".into(),
        });
    }
    p.resolve(&raw)
}

/// Parses a single term (no connectives). Variable sorts are inferred
/// where forced, with the single-sorted default as fallback.
pub fn parse_term(text: &str, language: &Language) -> Result<Term, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        language,
        slots: Slots::new(),
        scope: BTreeMap::new(),
        end: text.len(),
    };
    let raw = p.term()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.here(),
            msg: "trailing input".into(),
        });
    }
    p.resolve_term(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Language;

    fn graph() -> Language {
        Language::relational("V", &[("E", 2)])
    }

    fn with_fn() -> Language {
        Language::new(
            vec!["V".into()],
            vec![("E".into(), vec!["V".into(), "V".into()])],
            vec![("f".into(), vec!["V".into()], "V".into())],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn parses_universal_negation() {
        let f = parse_formula("forall x: !E(x,x)", &graph()).unwrap();
        match &f {
            Formula::Forall(vs, body) => {
                assert_eq!(vs[0], Var::new("x", "V"));
                assert!(matches!(**body, Formula::Not(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_flat_functional_atom() {
        let f = parse_formula("exists y: f(x)=y", &with_fn()).unwrap();
        match &f {
            Formula::Exists(vs, body) => {
                assert_eq!(vs[0], Var::new("y", "V"));
                match &**body {
                    Formula::Eq(Term::App(g, args), Term::Var(v)) => {
                        assert_eq!(g, "f");
                        assert_eq!(args[0], Term::Var(Var::new("x", "V")));
                        assert_eq!(v, &Var::new("y", "V"));
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arity_violation_is_an_error() {
        let err = parse_formula("E(x,f(y,z))", &with_fn()).unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { name, .. } if name == "f"));
    }

    #[test]
    fn undeclared_symbol_is_an_error() {
        let err = parse_formula("Q(x)", &graph()).unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredSymbol { name, .. } if name == "Q"));
    }

    #[test]
    fn implication_desugars() {
        let f = parse_formula("E(x,y) -> E(y,x)", &graph()).unwrap();
        match f {
            Formula::Or(parts) => {
                assert_eq!(parts.len(), 2);
                assert!(matches!(parts[0], Formula::Not(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_sorted_annotations_and_inference() {
        let lang = Language::new(
            vec!["V".into(), "S".into()],
            vec![("P".into(), vec!["S".into()])],
            vec![],
            vec![],
        )
        .unwrap();
        let f = parse_formula("forall s: P(s)", &lang).unwrap();
        match &f {
            Formula::Forall(vs, _) => assert_eq!(vs[0].sort, "S"),
            other => panic!("unexpected {other:?}"),
        }
        let g = parse_formula("forall x: V: exists y: S: P(y) & x = x", &lang).unwrap();
        match &g {
            Formula::Forall(vs, _) => assert_eq!(vs[0].sort, "V"),
            other => panic!("unexpected {other:?}"),
        }
        // Unconstrained variable in a multi-sorted language.
        let err = parse_formula("forall x: x = x", &lang).unwrap_err();
        assert!(matches!(err, ParseError::CannotInfer(_)));
    }

    #[test]
    fn sort_mismatch_reported() {
        let lang = Language::new(
            vec!["V".into(), "S".into()],
            vec![
                ("P".into(), vec!["S".into()]),
                ("E".into(), vec!["V".into(), "V".into()]),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let err = parse_formula("P(x) & E(x,y)", &lang).unwrap_err();
        assert!(matches!(err, ParseError::SortMismatch { .. }));
    }

    #[test]
    fn print_parse_round_trip() {
        let lang = with_fn();
        for text in [
            "forall x: !E(x,x)",
            "exists y: f(x)=y",
            "E(x,y) & E(y,z) & f(z)=x",
            "(E(x,y) | E(y,x)) & !x = y",
            "E(x,y) -> E(y,x)",
            "forall x y: exists z: E(x,z) & E(y,z)",
            "true | false & E(x,y)",
        ] {
            let f = parse_formula(text, &lang).unwrap();
            let printed = f.display_in(&lang);
            let g = parse_formula(&printed, &lang)
                .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
            assert_eq!(f, g, "round trip through `{printed}`");
        }
    }
}
