use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Config, ControllerSpec, VariableDecl};
use crate::fuzzy::{Universe, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, message: message.into() }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Semantic checks on a parsed config.
///
/// Declarations are visited in name order, so the result does not depend on
/// the order they appear in the text. Errors precede warnings.
pub fn validate(cfg: &Config) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut by_name: BTreeMap<&str, Vec<&VariableDecl>> = BTreeMap::new();
    for v in &cfg.variables {
        by_name.entry(v.name.as_str()).or_default().push(v);
    }
    for (name, decls) in &by_name {
        if decls.len() > 1 {
            out.push(Diagnostic::error(format!(
                "variable `{name}` is declared {} times",
                decls.len()
            )));
        }
        let mut own = Vec::new();
        for v in decls {
            check_variable(v, &mut own);
        }
        own.sort();
        own.dedup();
        out.extend(own);
    }

    let mut controllers: BTreeMap<&str, Vec<&ControllerSpec>> = BTreeMap::new();
    for c in &cfg.controllers {
        controllers.entry(c.name.as_str()).or_default().push(c);
    }
    for (name, decls) in &controllers {
        if decls.len() > 1 {
            out.push(Diagnostic::error(format!(
                "controller `{name}` is declared {} times",
                decls.len()
            )));
        }
        let mut own = Vec::new();
        for c in decls {
            check_controller(c, &by_name, &mut own);
        }
        if decls.len() > 1 {
            own.sort();
            own.dedup();
        }
        out.extend(own);
    }

    out.sort_by_key(|d| d.severity);
    out
}

fn check_variable(v: &VariableDecl, out: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for t in &v.terms {
        if !seen.insert(t.name.as_str()) {
            out.push(Diagnostic::error(format!(
                "variable `{}`: term `{}` is declared more than once",
                v.name, t.name
            )));
        }
        if t.shape.breakpoints().iter().any(|&p| p < v.lo || p > v.hi) {
            out.push(Diagnostic::error(format!(
                "variable `{}`: term `{}` ({}) has breakpoints outside the universe [{}, {}]",
                v.name, t.name, t.shape, v.lo, v.hi
            )));
        }
    }

    let Ok(universe) = Universe::with_default_resolution(v.lo, v.hi) else {
        out.push(Diagnostic::error(format!(
            "variable `{}`: universe [{}, {}] is empty",
            v.name, v.lo, v.hi
        )));
        return;
    };
    // uncovered stretches of the sample grid, as [first, last] point pairs
    let mut gap: Option<(f64, f64)> = None;
    let mut gaps = Vec::new();
    for x in universe.points() {
        let covered = v.terms.iter().any(|t| t.shape.eval(x) > 0.0);
        match (&mut gap, covered) {
            (Some(g), false) => g.1 = x,
            (None, false) => gap = Some((x, x)),
            (Some(_), true) => gaps.extend(gap.take()),
            (None, true) => {}
        }
    }
    gaps.extend(gap);
    for (a, b) in gaps {
        out.push(Diagnostic::error(format!(
            "variable `{}`: no term covers [{}, {}] (sampled at {DEFAULT_RESOLUTION} points)",
            v.name,
            short(a),
            short(b)
        )));
    }
}

fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn check_controller(
    c: &ControllerSpec,
    vars: &BTreeMap<&str, Vec<&VariableDecl>>,
    out: &mut Vec<Diagnostic>,
) {
    let before = out.len();
    // duplicated variables are reported elsewhere and not resolved here
    let lookup = |name: &str| vars.get(name).filter(|d| d.len() == 1).map(|d| d[0]);
    let declared = |name: &str| vars.contains_key(name);

    let mut seen = BTreeSet::new();
    for input in &c.inputs {
        if !seen.insert(input.as_str()) {
            out.push(Diagnostic::error(format!(
                "controller `{}`: input `{input}` is listed more than once",
                c.name
            )));
        }
        if !declared(input) {
            out.push(Diagnostic::error(format!(
                "controller `{}`: input `{input}` is not a declared variable",
                c.name
            )));
        }
    }
    if !declared(&c.output) {
        out.push(Diagnostic::error(format!(
            "controller `{}`: output `{}` is not a declared variable",
            c.name, c.output
        )));
    }
    if c.inputs.contains(&c.output) {
        out.push(Diagnostic::error(format!(
            "controller `{}`: `{}` is both an input and the output",
            c.name, c.output
        )));
    }
    if c.rules.is_empty() {
        out.push(Diagnostic::error(format!("controller `{}` has no rules", c.name)));
    }

    for (i, rule) in c.rules.iter().enumerate() {
        let n = i + 1;
        let mut used = BTreeSet::new();
        for cond in &rule.antecedents {
            if !used.insert(cond.variable.as_str()) {
                out.push(Diagnostic::error(format!(
                    "controller `{}`, rule {n}: variable `{}` appears twice in the condition",
                    c.name, cond.variable
                )));
            }
            if !c.inputs.contains(&cond.variable) {
                out.push(Diagnostic::error(format!(
                    "controller `{}`, rule {n}: `{}` is not an input of this controller",
                    c.name, cond.variable
                )));
            } else if let Some(v) = lookup(&cond.variable) {
                if v.term(&cond.term).is_none() {
                    out.push(Diagnostic::error(format!(
                        "controller `{}`, rule {n}: variable `{}` has no term `{}`",
                        c.name, cond.variable, cond.term
                    )));
                }
            }
        }
        if rule.consequent.variable != c.output {
            out.push(Diagnostic::error(format!(
                "controller `{}`, rule {n}: consequent `{}` is not the output `{}`",
                c.name, rule.consequent.variable, c.output
            )));
        } else if let Some(v) = lookup(&c.output) {
            if v.term(&rule.consequent.term).is_none() {
                out.push(Diagnostic::error(format!(
                    "controller `{}`, rule {n}: variable `{}` has no term `{}`",
                    c.name, c.output, rule.consequent.term
                )));
            }
        }
    }

    let resolved = c.inputs.iter().all(|i| lookup(i).is_some());
    if out.len() == before && resolved {
        for missing in uncovered_combinations(c, &lookup) {
            let cond: Vec<String> = c
                .inputs
                .iter()
                .zip(&missing)
                .map(|(var, term)| format!("{var} IS {term}"))
                .collect();
            out.push(Diagnostic::warning(format!(
                "controller `{}`: no rule for {}",
                c.name,
                cond.join(" AND ")
            )));
        }
    }
}

/// Input-term combinations (one term per input, in input order) that no rule
/// matches. A rule that leaves an input unconstrained matches every term of it.
pub(crate) fn uncovered_combinations<'a>(
    c: &ControllerSpec,
    lookup: &dyn Fn(&str) -> Option<&'a VariableDecl>,
) -> Vec<Vec<String>> {
    let term_lists: Vec<Vec<&str>> = c
        .inputs
        .iter()
        .map(|name| {
            lookup(name)
                .map(|v| v.terms.iter().map(|t| t.name.as_str()).collect())
                .unwrap_or_default()
        })
        .collect();
    if term_lists.iter().any(|t| t.is_empty()) {
        return Vec::new();
    }

    let mut missing = Vec::new();
    let mut idx = vec![0usize; term_lists.len()];
    loop {
        let combo: Vec<&str> = idx.iter().zip(&term_lists).map(|(&i, t)| t[i]).collect();
        let matched = c.rules.iter().any(|r| {
            r.antecedents.iter().all(|cond| {
                c.inputs
                    .iter()
                    .position(|v| *v == cond.variable)
                    .is_some_and(|k| combo[k] == cond.term)
            })
        });
        if !matched {
            missing.push(combo.iter().map(|s| s.to_string()).collect());
        }
        // odometer, last input fastest
        let mut k = idx.len();
        loop {
            if k == 0 {
                return missing;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < term_lists[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_config;

    const VARS: &str = "
        variable a universe 0 100 { term L tri 0 0 50; term M tri 0 50 100; term H tri 50 100 100; }
        variable b universe 0 100 { term L tri 0 0 50; term M tri 0 50 100; term H tri 50 100 100; }
        variable c universe 0 100 { term L tri 0 0 50; term M tri 0 50 100; term H tri 50 100 100; }
        variable o universe 0 100 { term L tri 0 0 50; term M tri 0 50 100; term H tri 50 100 100; }
    ";

    fn full_base() -> String {
        let mut s = String::from(VARS);
        s.push_str("controller top inputs (a, b, c) output o {\n");
        for x in ["L", "M", "H"] {
            for y in ["L", "M", "H"] {
                for z in ["L", "M", "H"] {
                    s.push_str(&format!("rule IF a IS {x} AND b IS {y} AND c IS {z} THEN o IS M;\n"));
                }
            }
        }
        s.push('}');
        s
    }

    #[test]
    fn complete_base_is_clean() {
        assert!(validate(&parse_config(&full_base()).unwrap()).is_empty());
    }

    #[test]
    fn unknown_term_names_rule_index() {
        let src = format!(
            "{VARS} controller top inputs (a) output o {{
                rule IF a IS L THEN o IS L;
                rule IF a IS XL THEN o IS H;
            }}"
        );
        let diags = validate(&parse_config(&src).unwrap());
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].severity, Severity::Error);
        assert!(diags[0].message.contains("rule 2") && diags[0].message.contains("`XL`"));
    }

    #[test]
    fn partial_base_lists_missing_combinations() {
        let src = format!(
            "{VARS} controller top inputs (a, b, c) output o {{
                rule IF a IS L AND b IS L AND c IS L THEN o IS L;
                rule IF a IS H AND b IS H THEN o IS H;
            }}"
        );
        let diags = validate(&parse_config(&src).unwrap());
        // 27 combinations; the first rule covers one, the second covers three
        assert_eq!(diags.len(), 23);
        assert!(diags.iter().all(|d| d.severity == Severity::Warning));
        assert!(diags[0].message.ends_with("a IS L AND b IS L AND c IS M"));
    }

    #[test]
    fn structural_errors() {
        let src = "
            variable a universe 0 10 { term L tri 0 0 5; term L tri 0 5 10; term X tri 8 9 12; }
            variable g universe 0 10 { term lo tri 0 0 3; term hi tri 6 10 10; }
            variable a universe 0 1 { term x crisp 0 1; }
            controller k inputs (a, a, nope) output a {
                rule IF a IS L AND a IS L THEN a IS L;
                rule IF g IS lo THEN zz IS L;
            }";
        let diags = validate(&parse_config(src).unwrap());
        let text: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        let has = |s: &str| text.iter().any(|t| t.contains(s));
        assert!(has("variable `a` is declared 2 times"), "{text:#?}");
        assert!(has("term `L` is declared more than once"));
        assert!(has("term `X` (tri 8 9 12) has breakpoints outside"));
        assert!(has("variable `g`: no term covers [3, 6]"));
        assert!(has("input `a` is listed more than once"));
        assert!(has("input `nope` is not a declared variable"));
        assert!(has("`a` is both an input and the output"));
        assert!(has("rule 1: variable `a` appears twice"));
        assert!(has("rule 2: `g` is not an input"));
        assert!(has("rule 2: consequent `zz` is not the output"));
        assert!(diags.iter().all(|d| d.severity == Severity::Error));
    }

    #[test]
    fn declaration_order_does_not_matter() {
        let src = format!(
            "{VARS} variable a universe 0 5 {{ term q crisp 0 1; }}
             controller top inputs (a, b) output o {{ rule IF a IS L THEN o IS Z; }}
             controller aux inputs (c) output o {{ rule IF c IS L THEN o IS L; }}"
        );
        let mut cfg = parse_config(&src).unwrap();
        let expected = validate(&cfg);
        assert!(!expected.is_empty());
        cfg.variables.reverse();
        cfg.controllers.reverse();
        assert_eq!(validate(&cfg), expected);
    }
}
