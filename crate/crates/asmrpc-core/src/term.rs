//! Terms and transition rules.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::value::{Name, Value};

/// A term: a constant, a bound variable, or a function application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Const(Value),
    Var(Name),
    Apply(Name, Vec<Term>),
}

impl Term {
    pub fn constant(v: Value) -> Term {
        Term::Const(v)
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    pub fn apply(symbol: &str, args: impl Into<Vec<Term>>) -> Term {
        Term::Apply(Arc::from(symbol), args.into())
    }

    pub fn nullary(symbol: &str) -> Term {
        Term::apply(symbol, [])
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut out);
        out
    }

    fn collect_free_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Apply(_, args) => {
                for a in args {
                    a.collect_free_vars(out);
                }
            }
        }
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Const(_) | Term::Var(_) => {}
            Term::Apply(f, args) => {
                out.insert(f.clone());
                for a in args {
                    a.collect_symbols(out);
                }
            }
        }
    }

    /// Substitutes free occurrences of variables by terms.
    pub fn substitute(&self, subst: &[(Name, Term)]) -> Term {
        match self {
            Term::Const(_) => self.clone(),
            Term::Var(v) => subst
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| self.clone()),
            Term::Apply(f, args) => Term::Apply(
                f.clone(),
                args.iter().map(|a| a.substitute(subst)).collect(),
            ),
        }
    }
}

/// A transition rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    /// `f(t1,..,tn) := t0`
    Update {
        symbol: Name,
        args: Vec<Term>,
        value: Term,
    },
    /// Simultaneous execution; the update set is the union of the parts'.
    Block(Vec<Rule>),
    /// `if g then R0 else R1 endif`
    Cond {
        guard: Term,
        then_rule: Box<Rule>,
        else_rule: Box<Rule>,
    },
    /// `choose v satisfying c(v) R0(v) endchoose`
    Choose {
        var: Name,
        condition: Term,
        body: Box<Rule>,
    },
}

impl Rule {
    pub fn update(symbol: &str, args: impl Into<Vec<Term>>, value: Term) -> Rule {
        Rule::Update {
            symbol: Arc::from(symbol),
            args: args.into(),
            value,
        }
    }

    pub fn skip() -> Rule {
        Rule::Block(Vec::new())
    }

    pub fn cond(guard: Term, then_rule: Rule, else_rule: Rule) -> Rule {
        Rule::Cond {
            guard,
            then_rule: Box::new(then_rule),
            else_rule: Box::new(else_rule),
        }
    }

    pub fn choose(var: &str, condition: Term, body: Rule) -> Rule {
        Rule::Choose {
            var: Arc::from(var),
            condition,
            body: Box::new(body),
        }
    }

    /// All function symbols mentioned anywhere in the rule.
    pub fn symbols(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Name>) {
        match self {
            Rule::Update { symbol, args, value } => {
                out.insert(symbol.clone());
                for a in args {
                    a.collect_symbols(out);
                }
                value.collect_symbols(out);
            }
            Rule::Block(rules) => {
                for r in rules {
                    r.collect_symbols(out);
                }
            }
            Rule::Cond {
                guard,
                then_rule,
                else_rule,
            } => {
                guard.collect_symbols(out);
                then_rule.collect_symbols(out);
                else_rule.collect_symbols(out);
            }
            Rule::Choose {
                condition, body, ..
            } => {
                condition.collect_symbols(out);
                body.collect_symbols(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut out);
        out
    }

    fn collect_free_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Rule::Update { args, value, .. } => {
                for a in args {
                    a.collect_free_vars(out);
                }
                value.collect_free_vars(out);
            }
            Rule::Block(rules) => {
                for r in rules {
                    r.collect_free_vars(out);
                }
            }
            Rule::Cond {
                guard,
                then_rule,
                else_rule,
            } => {
                guard.collect_free_vars(out);
                then_rule.collect_free_vars(out);
                else_rule.collect_free_vars(out);
            }
            Rule::Choose {
                var,
                condition,
                body,
            } => {
                let mut inner = BTreeSet::new();
                condition.collect_free_vars(&mut inner);
                body.collect_free_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_binds_its_variable() {
        let r = Rule::choose(
            "p",
            Term::apply("=", [Term::var("p"), Term::var("q")]),
            Rule::update("f", [Term::var("p")], Term::nullary("true")),
        );
        let fv = r.free_vars();
        assert!(fv.contains("q"));
        assert!(!fv.contains("p"));
    }

    #[test]
    fn symbols_are_collected() {
        let r = Rule::cond(
            Term::apply("=", [Term::nullary("CallName"), Term::nullary("read")]),
            Rule::update("Memory", [Term::nullary("l1")], Term::nullary("v1")),
            Rule::skip(),
        );
        let syms = r.symbols();
        for s in ["=", "CallName", "read", "Memory", "l1", "v1"] {
            assert!(syms.contains(s), "missing {s}");
        }
    }
}
