use std::fmt::Write;

use super::{Condition, Config, RuleDecl};

/// Canonical text for `cfg`: all variables, then all controllers, in their
/// stored order. Numbers use the shortest representation that parses back
/// to the same `f64`. Comments are not preserved.
pub fn serialize(cfg: &Config) -> String {
    let mut out = String::new();
    for v in &cfg.variables {
        let _ = writeln!(out, "variable {} universe {} {} {{", v.name, v.lo, v.hi);
        for t in &v.terms {
            let _ = writeln!(out, "    term {} {};", t.name, t.shape);
        }
        out.push_str("}\n\n");
    }
    for c in &cfg.controllers {
        let _ = writeln!(
            out,
            "controller {} inputs ({}) output {} {{",
            c.name,
            c.inputs.join(", "),
            c.output
        );
        for r in &c.rules {
            let _ = writeln!(out, "    {}", rule_text(r));
        }
        out.push_str("}\n\n");
    }
    if out.ends_with("\n\n") {
        out.pop();
    }
    out
}

fn cond_text(c: &Condition) -> String {
    format!("{} IS {}", c.variable, c.term)
}

pub(crate) fn rule_text(r: &RuleDecl) -> String {
    let conds: Vec<String> = r.antecedents.iter().map(cond_text).collect();
    format!("rule IF {} THEN {};", conds.join(" AND "), cond_text(&r.consequent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_config;

    #[test]
    fn canonical_layout() {
        let cfg = parse_config(
            "variable  x universe 0 1.5 {term a tri 0 0 1.5;}  controller c inputs(x)output x{rule IF x IS a THEN x IS a;}",
        )
        .unwrap();
        assert_eq!(
            serialize(&cfg),
            "variable x universe 0 1.5 {\n    term a tri 0 0 1.5;\n}\n\n\
             controller c inputs (x) output x {\n    rule IF x IS a THEN x IS a;\n}\n"
        );
    }
}
