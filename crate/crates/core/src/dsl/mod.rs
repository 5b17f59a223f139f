//! Text format for linguistic variables and controller rule bases (`.fzc`).
//!
//! ```text
//! config      := (variable | controller)* ;
//! variable    := "variable" IDENT "universe" NUM NUM "{" term+ "}" ;
//! term        := "term" IDENT ("tri" NUM NUM NUM | "trap" NUM NUM NUM NUM | "crisp" NUM NUM) ";" ;
//! controller  := "controller" IDENT "inputs" "(" IDENT ("," IDENT)* ")" "output" IDENT "{" rule+ "}" ;
//! rule        := "rule" "IF" cond ("AND" cond)* "THEN" IDENT "IS" IDENT ";" ;
//! cond        := IDENT "IS" IDENT ;
//! ```
//!
//! `#` starts a comment running to the end of the line.

mod lexer;
mod parser;
mod serialize;
mod validate;

pub use parser::{parse_config, ParseError};
pub use serialize::serialize;
pub use validate::{validate, Diagnostic, Severity};
pub(crate) use validate::uncovered_combinations;

use crate::fuzzy::{FuzzyError, LinguisticVariable, MembershipFunction, Term, Universe};

/// Words that cannot be used as identifiers.
pub const KEYWORDS: &[&str] = &[
    "variable", "universe", "term", "tri", "trap", "crisp", "controller", "inputs", "output",
    "rule", "IF", "AND", "THEN", "IS",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub variables: Vec<VariableDecl>,
    pub controllers: Vec<ControllerSpec>,
}

impl Config {
    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn controller(&self, name: &str) -> Option<&ControllerSpec> {
        self.controllers.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDecl {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<TermDecl>,
}

impl VariableDecl {
    pub fn term(&self, name: &str) -> Option<&TermDecl> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn to_linguistic(&self, resolution: usize) -> Result<LinguisticVariable, FuzzyError> {
        Ok(LinguisticVariable {
            name: self.name.clone(),
            universe: Universe::new(self.lo, self.hi, resolution)?,
            terms: self
                .terms
                .iter()
                .map(|t| Term { name: t.name.clone(), mf: t.shape })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermDecl {
    pub name: String,
    pub shape: MembershipFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub name: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub rules: Vec<RuleDecl>,
}

/// `variable IS term`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub variable: String,
    pub term: String,
}

impl Condition {
    pub fn new(variable: impl Into<String>, term: impl Into<String>) -> Self {
        Self { variable: variable.into(), term: term.into() }
    }
}

/// Conjunctive IF/THEN rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDecl {
    pub antecedents: Vec<Condition>,
    pub consequent: Condition,
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULT: &str = include_str!("../../configs/wellness-default.fzc");
    const EXCERPT: &str = include_str!("../../configs/wellness-excerpt.fzc");

    #[test]
    fn shipped_default_is_clean() {
        let cfg = parse_config(DEFAULT).unwrap();
        let diags = validate(&cfg);
        assert!(diags.is_empty(), "{diags:#?}");
        for name in ["physical", "productive", "social", "wellness"] {
            assert!(cfg.controller(name).is_some(), "missing controller {name}");
        }
        assert_eq!(cfg.controller("wellness").unwrap().rules.len(), 27);
    }

    #[test]
    fn excerpt_warns_about_each_missing_combination() {
        let cfg = parse_config(EXCERPT).unwrap();
        let diags = validate(&cfg);
        assert!(diags.iter().all(|d| d.severity == Severity::Warning));
        assert_eq!(diags.len(), 27 - 10);
    }

    #[test]
    fn round_trip_default() {
        let cfg = parse_config(DEFAULT).unwrap();
        let text = serialize(&cfg);
        let again = parse_config(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(serialize(&again), text);
    }

    #[test]
    fn round_trip_preserves_rule_order() {
        let src = "variable a universe 0 1 { term x crisp 0 1; term y crisp 0 1; }
                   variable o universe 0 1 { term p tri 0 0.5 1; }
                   controller c inputs (a) output o {
                       rule IF a IS y THEN o IS p;
                       rule IF a IS x THEN o IS p;
                   }";
        let cfg = parse_config(src).unwrap();
        let again = parse_config(&serialize(&cfg)).unwrap();
        let terms: Vec<_> = again.controllers[0]
            .rules
            .iter()
            .map(|r| r.antecedents[0].term.as_str())
            .collect();
        assert_eq!(terms, ["y", "x"]);
    }
}
