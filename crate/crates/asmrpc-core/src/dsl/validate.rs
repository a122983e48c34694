//! Static checks of a program against a vocabulary. Diagnostics are data,
//! not errors; callers decide severity policy.

use std::collections::BTreeSet;

use super::{DslRule, DslTerm, ProgramDef, RuleKind, Span, TermKind};
use crate::state::{builtin_arity, is_builtin, Vocabulary};
use crate::value::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

struct Validator<'a> {
    vocab: &'a Vocabulary,
    program: &'a ProgramDef,
    diags: Vec<Diagnostic>,
}

impl<'a> Validator<'a> {
    fn err(&mut self, span: Span, message: String) {
        self.diags.push(Diagnostic {
            severity: Severity::Error,
            message,
            span,
        });
    }

    fn warn(&mut self, span: Span, message: String) {
        self.diags.push(Diagnostic {
            severity: Severity::Warning,
            message,
            span,
        });
    }

    fn is_constant(&self, name: &str) -> bool {
        self.program.constants.iter().any(|c| c.as_ref() == name)
            || self
                .program
                .universes
                .values()
                .any(|ms| ms.iter().any(|m| m.as_ref() == name))
    }

    fn symbol_arity(&self, name: &str) -> Option<usize> {
        if name == "Me" {
            return Some(0);
        }
        if let Some(a) = builtin_arity(name) {
            return Some(a);
        }
        if let Some(sym) = self.vocab.lookup(name) {
            return Some(sym.arity);
        }
        if self.is_constant(name) || self.program.universes.contains_key(name) {
            return Some(if self.program.universes.contains_key(name) {
                1
            } else {
                0
            });
        }
        None
    }

    fn check_term(&mut self, t: &DslTerm, bound: &BTreeSet<Name>) {
        match &t.kind {
            TermKind::Int(_) => {}
            TermKind::List(items) => {
                for it in items {
                    self.check_term(it, bound);
                }
            }
            TermKind::Var(v) => {
                if !bound.contains(v) {
                    self.err(t.span, format!("unbound variable `{v}`"));
                }
            }
            TermKind::Apply(f, args) => {
                match self.symbol_arity(f) {
                    None => self.err(t.span, format!("undeclared symbol `{f}`")),
                    Some(expected) if expected != args.len() => self.err(
                        t.span,
                        format!(
                            "arity mismatch: `{f}` expects {expected} arguments, got {}",
                            args.len()
                        ),
                    ),
                    Some(_) => {}
                }
                for a in args {
                    self.check_term(a, bound);
                }
            }
        }
    }

    /// Best-effort constant Boolean-ness of a term, for relation updates.
    fn obviously_non_boolean(&self, t: &DslTerm) -> bool {
        match &t.kind {
            TermKind::Int(_) | TermKind::List(_) => true,
            TermKind::Apply(f, args) if args.is_empty() => {
                f.as_ref() != "true" && f.as_ref() != "false" && self.is_constant(f)
            }
            _ => false,
        }
    }

    fn check_rule(&mut self, r: &DslRule, bound: &BTreeSet<Name>) {
        match &r.kind {
            RuleKind::Update {
                symbol,
                args,
                value,
            } => {
                let is_relation = self
                    .vocab
                    .lookup(symbol)
                    .map(|s| s.is_relation)
                    .unwrap_or(false)
                    || self.program.universes.contains_key(symbol);
                if is_builtin(symbol) {
                    self.err(r.span, format!("cannot update built-in symbol `{symbol}`"));
                } else {
                    match self.symbol_arity(symbol) {
                        None => self.err(r.span, format!("undeclared symbol `{symbol}`")),
                        Some(expected) if expected != args.len() => self.err(
                            r.span,
                            format!(
                                "arity mismatch: `{symbol}` expects {expected} arguments, got {}",
                                args.len()
                            ),
                        ),
                        Some(_) => {}
                    }
                }
                if is_relation && self.obviously_non_boolean(value) {
                    self.err(
                        r.span,
                        format!("relation `{symbol}` assigned a non-Boolean value"),
                    );
                }
                for a in args {
                    self.check_term(a, bound);
                }
                self.check_term(value, bound);
            }
            RuleKind::Block(rules) => {
                for inner in rules {
                    self.check_rule(inner, bound);
                }
            }
            RuleKind::Cond {
                guard,
                then_rule,
                else_rule,
            } => {
                self.check_term(guard, bound);
                self.check_rule(then_rule, bound);
                self.check_rule(else_rule, bound);
            }
            RuleKind::Choose {
                var,
                condition,
                body,
            } => {
                if self.symbol_arity(var).is_some() {
                    self.warn(
                        r.span,
                        format!("choose variable `{var}` shadows a declared symbol"),
                    );
                }
                let mut inner = bound.clone();
                inner.insert(var.clone());
                self.check_term(condition, &inner);
                self.check_rule(body, &inner);
            }
            RuleKind::MacroCall { name, args } => {
                match self.program.macros.get(name) {
                    None => self.err(r.span, format!("unknown macro `{name}`")),
                    Some(def) if def.params.len() != args.len() => self.err(
                        r.span,
                        format!(
                            "macro `{name}` expects {} arguments, got {}",
                            def.params.len(),
                            args.len()
                        ),
                    ),
                    Some(_) => {}
                }
                for a in args {
                    self.check_term(a, bound);
                }
            }
        }
    }
}

/// Reports undeclared symbols, arity mismatches, relation misuse, unknown
/// macros, and choose variables shadowing symbols.
pub fn validate_program(program: &ProgramDef, vocab: &Vocabulary) -> Vec<Diagnostic> {
    let mut v = Validator {
        vocab,
        program,
        diags: Vec::new(),
    };
    for def in program.macros.values() {
        let bound: BTreeSet<Name> = def.params.iter().cloned().collect();
        v.check_rule(&def.body, &bound);
    }
    for rule in program.modules.values() {
        v.check_rule(rule, &BTreeSet::new());
    }
    v.diags
}
