//! The textual rule language.
//!
//! Programs live in `.asm` files: `#` line comments, `const` and `universe`
//! declarations, `macro NAME(params) ... endmacro` templates, and
//! `module NAME ... endmodule` transition rules. Keywords are lowercase;
//! updates are written `f(t, ...) := t`; block items are separated by
//! newlines or commas. `elseif` desugars to a nested conditional and a
//! missing `else` to an empty block.

mod expand;
mod lexer;
mod parser;
mod render;
mod validate;

pub use expand::{expand_macros, expand_rule, ExpandError};
pub use parser::{parse_program, parse_rule_text};
pub use render::{render_core_rule, render_program, render_rule, render_term};
pub use validate::{validate_program, Diagnostic, Severity};

use std::collections::BTreeMap;

use crate::value::Name;

/// Source position of a node; columns and lines are 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub offset: u32,
    pub len: u32,
}

/// A term as parsed; variables are occurrences of choose binders or macro
/// parameters, resolved during parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DslTerm {
    pub kind: TermKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    Int(i64),
    List(Vec<DslTerm>),
    Var(Name),
    Apply(Name, Vec<DslTerm>),
}

impl DslTerm {
    /// Copy with every span zeroed, for structural comparison.
    pub fn stripped(&self) -> DslTerm {
        let kind = match &self.kind {
            TermKind::Int(n) => TermKind::Int(*n),
            TermKind::List(items) => TermKind::List(items.iter().map(|t| t.stripped()).collect()),
            TermKind::Var(v) => TermKind::Var(v.clone()),
            TermKind::Apply(f, args) => {
                TermKind::Apply(f.clone(), args.iter().map(|t| t.stripped()).collect())
            }
        };
        DslTerm {
            kind,
            span: Span::default(),
        }
    }
}

/// A rule as parsed; macro calls are not yet expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DslRule {
    pub kind: RuleKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    Update {
        symbol: Name,
        args: Vec<DslTerm>,
        value: DslTerm,
    },
    Block(Vec<DslRule>),
    Cond {
        guard: DslTerm,
        then_rule: Box<DslRule>,
        else_rule: Box<DslRule>,
    },
    Choose {
        var: Name,
        condition: DslTerm,
        body: Box<DslRule>,
    },
    MacroCall {
        name: Name,
        args: Vec<DslTerm>,
    },
}

impl DslRule {
    pub fn stripped(&self) -> DslRule {
        let kind = match &self.kind {
            RuleKind::Update {
                symbol,
                args,
                value,
            } => RuleKind::Update {
                symbol: symbol.clone(),
                args: args.iter().map(|t| t.stripped()).collect(),
                value: value.stripped(),
            },
            RuleKind::Block(rules) => {
                RuleKind::Block(rules.iter().map(|r| r.stripped()).collect())
            }
            RuleKind::Cond {
                guard,
                then_rule,
                else_rule,
            } => RuleKind::Cond {
                guard: guard.stripped(),
                then_rule: Box::new(then_rule.stripped()),
                else_rule: Box::new(else_rule.stripped()),
            },
            RuleKind::Choose {
                var,
                condition,
                body,
            } => RuleKind::Choose {
                var: var.clone(),
                condition: condition.stripped(),
                body: Box::new(body.stripped()),
            },
            RuleKind::MacroCall { name, args } => RuleKind::MacroCall {
                name: name.clone(),
                args: args.iter().map(|t| t.stripped()).collect(),
            },
        };
        DslRule {
            kind,
            span: Span::default(),
        }
    }

    /// Structural equality, ignoring source spans.
    pub fn structurally_eq(&self, other: &DslRule) -> bool {
        self.stripped() == other.stripped()
    }

    /// Canonical form: nested blocks flattened, singleton blocks unwrapped.
    /// Parsing always yields normalized rules, so `parse(render(r))` equals
    /// `normalize(r)`.
    pub fn normalized(&self) -> DslRule {
        match &self.kind {
            RuleKind::Block(rules) => {
                let mut items = Vec::new();
                for r in rules {
                    let n = r.normalized();
                    match n.kind {
                        RuleKind::Block(inner) => items.extend(inner),
                        _ => items.push(n),
                    }
                }
                if items.len() == 1 {
                    items.pop().unwrap()
                } else {
                    DslRule {
                        kind: RuleKind::Block(items),
                        span: self.span,
                    }
                }
            }
            RuleKind::Cond {
                guard,
                then_rule,
                else_rule,
            } => DslRule {
                kind: RuleKind::Cond {
                    guard: guard.clone(),
                    then_rule: Box::new(then_rule.normalized()),
                    else_rule: Box::new(else_rule.normalized()),
                },
                span: self.span,
            },
            RuleKind::Choose {
                var,
                condition,
                body,
            } => DslRule {
                kind: RuleKind::Choose {
                    var: var.clone(),
                    condition: condition.clone(),
                    body: Box::new(body.normalized()),
                },
                span: self.span,
            },
            _ => self.clone(),
        }
    }
}

/// A macro definition: a syntactic template, as in the component figures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: DslRule,
    pub span: Span,
}

/// One parsed `.asm` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramDef {
    /// Symbolic constants, interpreted as themselves.
    pub constants: Vec<Name>,
    /// Declared finite universes with their members.
    pub universes: BTreeMap<Name, Vec<Name>>,
    pub macros: BTreeMap<Name, MacroDef>,
    pub modules: BTreeMap<Name, DslRule>,
}

impl ProgramDef {
    /// Merges another program in (macro library + component files form one
    /// scenario program). Later definitions must not collide.
    pub fn merge(&mut self, other: &ProgramDef) -> Result<(), String> {
        for c in &other.constants {
            if !self.constants.contains(c) {
                self.constants.push(c.clone());
            }
        }
        for (u, members) in &other.universes {
            if self.universes.contains_key(u) {
                return Err(format!("duplicate universe `{u}`"));
            }
            self.universes.insert(u.clone(), members.clone());
        }
        for (name, def) in &other.macros {
            if self.macros.contains_key(name) {
                return Err(format!("duplicate macro `{name}`"));
            }
            self.macros.insert(name.clone(), def.clone());
        }
        for (name, rule) in &other.modules {
            if self.modules.contains_key(name) {
                return Err(format!("duplicate module `{name}`"));
            }
            self.modules.insert(name.clone(), rule.clone());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at line {}, column {}", span.line, span.col)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}
