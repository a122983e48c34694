//! Pretty-printer. `parse(render(r))` reproduces `r.normalized()`, and
//! rendering a parsed program is byte-stable.

use super::{DslRule, DslTerm, ProgramDef, RuleKind, Span, TermKind};
use crate::term::{Rule, Term};
use crate::value::Value;

// Binding strength, loosest first; used to decide parenthesization.
fn level_of(op: &str) -> Option<u8> {
    Some(match op {
        "or" => 1,
        "and" => 2,
        "not" => 3,
        "=" | "!=" | ">=" | "<=" | ">" | "<" => 4,
        "+" => 5,
        "*" => 6,
        _ => return None,
    })
}

pub fn render_term(t: &DslTerm) -> String {
    let mut out = String::new();
    write_term(&mut out, t, 0);
    out
}

fn write_term(out: &mut String, t: &DslTerm, parent: u8) {
    match &t.kind {
        TermKind::Int(n) => out.push_str(&n.to_string()),
        TermKind::Var(v) => out.push_str(v),
        TermKind::List(items) => {
            out.push('[');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, it, 0);
            }
            out.push(']');
        }
        TermKind::Apply(f, args) => match (level_of(f), args.len()) {
            (Some(lvl), 2) => {
                let need = lvl < parent;
                if need {
                    out.push('(');
                }
                // Comparisons are non-associative: both sides are tighter.
                // Associative chains keep the left side at their own level so
                // they re-parse left-associated.
                let cmp = matches!(f.as_ref(), "=" | "!=" | ">=" | "<=" | ">" | "<");
                write_term(out, &args[0], if cmp { lvl + 1 } else { lvl });
                out.push(' ');
                out.push_str(f);
                out.push(' ');
                write_term(out, &args[1], lvl + 1);
                if need {
                    out.push(')');
                }
            }
            (Some(lvl), 1) if f.as_ref() == "not" => {
                let need = lvl < parent;
                if need {
                    out.push('(');
                }
                out.push_str("not ");
                write_term(out, &args[0], lvl);
                if need {
                    out.push(')');
                }
            }
            _ => {
                out.push_str(f);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_term(out, a, 0);
                    }
                    out.push(')');
                }
            }
        },
    }
}

pub fn render_rule(r: &DslRule) -> String {
    let mut out = String::new();
    write_rule(&mut out, r, 0);
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_rule(out: &mut String, r: &DslRule, depth: usize) {
    match &r.kind {
        RuleKind::Update {
            symbol,
            args,
            value,
        } => {
            indent(out, depth);
            out.push_str(symbol);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_term(out, a, 0);
                }
                out.push(')');
            }
            out.push_str(" := ");
            write_term(out, value, 0);
            out.push('\n');
        }
        RuleKind::Block(rules) => {
            for inner in rules {
                write_rule(out, inner, depth);
            }
        }
        RuleKind::Cond {
            guard,
            then_rule,
            else_rule,
        } => {
            indent(out, depth);
            out.push_str("if ");
            write_term(out, guard, 0);
            out.push_str(" then\n");
            write_rule(out, then_rule, depth + 1);
            write_else(out, else_rule, depth);
            indent(out, depth);
            out.push_str("endif\n");
        }
        RuleKind::Choose {
            var,
            condition,
            body,
        } => {
            indent(out, depth);
            out.push_str("choose ");
            out.push_str(var);
            out.push_str(" satisfying ");
            write_term(out, condition, 0);
            out.push('\n');
            write_rule(out, body, depth + 1);
            indent(out, depth);
            out.push_str("endchoose\n");
        }
        RuleKind::MacroCall { name, args } => {
            indent(out, depth);
            out.push_str(name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_term(out, a, 0);
                }
                out.push(')');
            }
            out.push('\n');
        }
    }
}

/// An else-branch that is itself a conditional renders as an `elseif` chain;
/// an empty block renders as no else at all.
fn write_else(out: &mut String, else_rule: &DslRule, depth: usize) {
    match &else_rule.kind {
        RuleKind::Block(b) if b.is_empty() => {}
        RuleKind::Cond {
            guard,
            then_rule,
            else_rule,
        } => {
            indent(out, depth);
            out.push_str("elseif ");
            write_term(out, guard, 0);
            out.push_str(" then\n");
            write_rule(out, then_rule, depth + 1);
            write_else(out, else_rule, depth);
        }
        _ => {
            indent(out, depth);
            out.push_str("else\n");
            write_rule(out, else_rule, depth + 1);
        }
    }
}

pub fn render_program(p: &ProgramDef) -> String {
    let mut out = String::new();
    if !p.constants.is_empty() {
        out.push_str("const ");
        out.push_str(
            &p.constants
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push('\n');
    }
    for (name, members) in &p.universes {
        out.push_str("universe ");
        out.push_str(name);
        out.push_str(" = {");
        out.push_str(
            &members
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str("}\n");
    }
    for m in p.macros.values() {
        out.push('\n');
        out.push_str("macro ");
        out.push_str(&m.name);
        out.push('(');
        out.push_str(
            &m.params
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        out.push_str(")\n");
        write_rule(&mut out, &m.body, 1);
        out.push_str("endmacro\n");
    }
    for (name, body) in &p.modules {
        out.push('\n');
        out.push_str("module ");
        out.push_str(name);
        out.push('\n');
        write_rule(&mut out, body, 1);
        out.push_str("endmodule\n");
    }
    out
}

/// Renders an expanded core rule (no macro calls, no spans).
pub fn render_core_rule(r: &Rule) -> String {
    render_rule(&core_to_dsl(r))
}

fn core_term_to_dsl(t: &Term) -> DslTerm {
    let kind = match t {
        Term::Const(Value::Int(n)) => TermKind::Int(*n),
        Term::Const(Value::List(items)) => TermKind::List(
            items
                .iter()
                .map(|v| core_term_to_dsl(&Term::Const(v.clone())))
                .collect(),
        ),
        Term::Const(Value::Bool(true)) => TermKind::Apply("true".into(), Vec::new()),
        Term::Const(Value::Bool(false)) => TermKind::Apply("false".into(), Vec::new()),
        Term::Const(Value::Undef) => TermKind::Apply("undef".into(), Vec::new()),
        Term::Const(Value::Sym(s)) => TermKind::Apply(s.clone(), Vec::new()),
        Term::Const(Value::Tick(t)) => TermKind::Int(*t as i64),
        Term::Const(Value::Agent(a)) => TermKind::Apply(a.0.clone(), Vec::new()),
        Term::Var(v) => TermKind::Var(v.clone()),
        Term::Apply(f, args) => {
            TermKind::Apply(f.clone(), args.iter().map(core_term_to_dsl).collect())
        }
    };
    DslTerm {
        kind,
        span: Span::default(),
    }
}

fn core_to_dsl(r: &Rule) -> DslRule {
    let kind = match r {
        Rule::Update {
            symbol,
            args,
            value,
        } => RuleKind::Update {
            symbol: symbol.clone(),
            args: args.iter().map(core_term_to_dsl).collect(),
            value: core_term_to_dsl(value),
        },
        Rule::Block(rules) => RuleKind::Block(rules.iter().map(core_to_dsl).collect()),
        Rule::Cond {
            guard,
            then_rule,
            else_rule,
        } => RuleKind::Cond {
            guard: core_term_to_dsl(guard),
            then_rule: Box::new(core_to_dsl(then_rule)),
            else_rule: Box::new(core_to_dsl(else_rule)),
        },
        Rule::Choose {
            var,
            condition,
            body,
        } => RuleKind::Choose {
            var: var.clone(),
            condition: core_term_to_dsl(condition),
            body: Box::new(core_to_dsl(body)),
        },
    };
    DslRule {
        kind,
        span: Span::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_rule_text;
    use super::*;

    fn round_trip(text: &str) {
        let r = parse_rule_text(text).unwrap();
        let rendered = render_rule(&r);
        let r2 = parse_rule_text(&rendered).unwrap();
        assert!(
            r.structurally_eq(&r2),
            "round trip changed structure:\n{r:?}\nvs\n{r2:?}\nrendered:\n{rendered}"
        );
    }

    #[test]
    fn update_renders_plainly() {
        let r = parse_rule_text("x := 1").unwrap();
        assert_eq!(render_rule(&r), "x := 1\n");
    }

    #[test]
    fn round_trips() {
        round_trip("x := 1");
        round_trip("if a then x := 1 endif");
        round_trip("if a then x := 1 else x := 2 endif");
        round_trip("if a then x := 1 elseif b then x := 2 elseif c then x := 3 else x := 4 endif");
        round_trip("choose p satisfying Component(p) = d and CallSender(p) = undef\nCallSender(p) := Me\nendchoose");
        round_trip("if a = 1 or b = 2 and not c then x := f(y, [1, 2]) endif");
        round_trip("if CT >= CallInTime(Me) + 2 * delta + epsilon then FAIL endif");
        round_trip("if (a or b) and c then x := 1 endif");
        round_trip("RETURN(exception, BadArg)");
    }

    #[test]
    fn elseif_chains_are_reproduced() {
        let text = "if a then\n  x := 1\nelseif b then\n  x := 2\nelse\n  x := 3\nendif\n";
        let r = parse_rule_text(text).unwrap();
        assert_eq!(render_rule(&r), text);
    }
}
