//! Macro expansion: lowers a parsed rule into a core [`Rule`], substituting
//! macro calls by their bodies. Macros are syntactic templates; substitution
//! is capture-avoiding (a choose binder inside a body is renamed when an
//! argument mentions a variable of the same name).

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{DslRule, DslTerm, MacroDef, RuleKind, TermKind};
use crate::term::{Rule, Term};
use crate::value::{Name, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("unknown macro `{0}`")]
    UnknownMacro(Name),
    #[error("macro `{name}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: Name,
        expected: usize,
        got: usize,
    },
    #[error("recursive macro `{0}`")]
    RecursiveMacro(Name),
    #[error("list literals must have constant elements")]
    NonConstantList,
}

struct Expander<'a> {
    macros: &'a BTreeMap<Name, MacroDef>,
    stack: Vec<Name>,
    fresh: u32,
}

/// Substitution from variable names to already-lowered terms.
type Subst = Vec<(Name, Term)>;

fn term_free_vars(t: &Term, out: &mut Vec<Name>) {
    match t {
        Term::Const(_) => {}
        Term::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        Term::Apply(_, args) => {
            for a in args {
                term_free_vars(a, out);
            }
        }
    }
}

impl<'a> Expander<'a> {
    fn lower_term(&mut self, t: &DslTerm, subst: &Subst) -> Result<Term, ExpandError> {
        match &t.kind {
            TermKind::Int(n) => Ok(Term::Const(Value::Int(*n))),
            TermKind::List(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for it in items {
                    match self.lower_term(it, subst)? {
                        Term::Const(v) => vals.push(v),
                        _ => return Err(ExpandError::NonConstantList),
                    }
                }
                Ok(Term::Const(Value::List(vals)))
            }
            TermKind::Var(v) => Ok(subst
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, t)| t.clone())
                .unwrap_or(Term::Var(v.clone()))),
            TermKind::Apply(f, args) => {
                let mut lowered = Vec::with_capacity(args.len());
                for a in args {
                    lowered.push(self.lower_term(a, subst)?);
                }
                Ok(Term::Apply(f.clone(), lowered))
            }
        }
    }

    fn lower_rule(&mut self, r: &DslRule, subst: &Subst) -> Result<Rule, ExpandError> {
        match &r.kind {
            RuleKind::Update {
                symbol,
                args,
                value,
            } => {
                let mut lowered = Vec::with_capacity(args.len());
                for a in args {
                    lowered.push(self.lower_term(a, subst)?);
                }
                Ok(Rule::Update {
                    symbol: symbol.clone(),
                    args: lowered,
                    value: self.lower_term(value, subst)?,
                })
            }
            RuleKind::Block(rules) => {
                let mut out = Vec::with_capacity(rules.len());
                for inner in rules {
                    out.push(self.lower_rule(inner, subst)?);
                }
                Ok(Rule::Block(out))
            }
            RuleKind::Cond {
                guard,
                then_rule,
                else_rule,
            } => Ok(Rule::Cond {
                guard: self.lower_term(guard, subst)?,
                then_rule: Box::new(self.lower_rule(then_rule, subst)?),
                else_rule: Box::new(self.lower_rule(else_rule, subst)?),
            }),
            RuleKind::Choose {
                var,
                condition,
                body,
            } => {
                // Rename the binder if a substituted term could capture it.
                let mut captured = Vec::new();
                for (_, t) in subst {
                    term_free_vars(t, &mut captured);
                }
                let mut subst = subst.clone();
                let binder = if captured.contains(var) || subst.iter().any(|(n, _)| n == var) {
                    self.fresh += 1;
                    let fresh: Name = Arc::from(format!("{var}_{}", self.fresh).as_str());
                    subst.push((var.clone(), Term::Var(fresh.clone())));
                    fresh
                } else {
                    var.clone()
                };
                Ok(Rule::Choose {
                    var: binder,
                    condition: self.lower_term(condition, &subst)?,
                    body: Box::new(self.lower_rule(body, &subst)?),
                })
            }
            RuleKind::MacroCall { name, args } => {
                let def = self
                    .macros
                    .get(name)
                    .ok_or_else(|| ExpandError::UnknownMacro(name.clone()))?;
                if def.params.len() != args.len() {
                    return Err(ExpandError::ArityMismatch {
                        name: name.clone(),
                        expected: def.params.len(),
                        got: args.len(),
                    });
                }
                if self.stack.contains(name) {
                    return Err(ExpandError::RecursiveMacro(name.clone()));
                }
                let mut inner_subst: Subst = Vec::with_capacity(args.len());
                for (param, arg) in def.params.iter().zip(args) {
                    inner_subst.push((param.clone(), self.lower_term(arg, subst)?));
                }
                self.stack.push(name.clone());
                let body = def.body.clone();
                let result = self.lower_rule(&body, &inner_subst);
                self.stack.pop();
                result
            }
        }
    }
}

/// Expands all macro calls in `rule`, producing a core rule.
pub fn expand_rule(
    rule: &DslRule,
    macros: &BTreeMap<Name, MacroDef>,
) -> Result<Rule, ExpandError> {
    let mut e = Expander {
        macros,
        stack: Vec::new(),
        fresh: 0,
    };
    e.lower_rule(rule, &Vec::new())
}

/// Expands every module of a program against its macro table (plus an
/// optional shared library), yielding executable rules.
pub fn expand_macros(
    modules: &BTreeMap<Name, DslRule>,
    macros: &BTreeMap<Name, MacroDef>,
) -> Result<BTreeMap<Name, Rule>, ExpandError> {
    let mut out = BTreeMap::new();
    for (name, rule) in modules {
        out.insert(name.clone(), expand_rule(rule, macros)?);
    }
    Ok(out)
}
