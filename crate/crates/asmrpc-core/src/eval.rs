//! Term evaluation and update-set computation.
//!
//! Evaluation is strict two-valued: `not`/`and`/`or` treat any non-`true`
//! operand (including `undef`) as not-true, and a conditional takes its
//! else-branch unless the guard evaluates to exactly `true`. Equality is
//! total over all values; in particular `undef = undef` is `true`.

use crate::state::{Location, State, UpdateSet};
use crate::term::{Rule, Term};
use crate::value::{AgentId, Name, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Name),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("arity mismatch: `{symbol}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: Name,
        expected: usize,
        got: usize,
    },
    #[error("choice resolver picked index {picked} out of {candidates} candidates")]
    ResolverOutOfRange { picked: usize, candidates: usize },
    #[error("no oracle defined for external symbol `{0}`")]
    MissingOracle(Name),
}

/// Supplies the two effects a rule can demand while its update set is
/// computed: resolving a choose and reading an external function.
///
/// A driver with fixed behavior makes evaluation a pure function of the
/// state and environment.
pub trait Driver {
    /// Picks one of `candidates` (all satisfy the choose condition).
    fn choose(&mut self, candidates: &[Value]) -> Result<usize, EvalError>;

    /// Reads an external function. Returning `Ok(None)` falls through to the
    /// state interpretation (used when external values live in the state,
    /// as in timed runs).
    fn external(&mut self, symbol: &Name, args: &[Value]) -> Result<Option<Value>, EvalError>;

    /// Instrumentation hook: called for every non-external location read
    /// performed on the evaluated control path.
    fn note_read(&mut self, _location: &Location, _value: &Value) {}
}

/// Driver for pure evaluation: takes the first candidate of every choose and
/// reads externals from the state.
#[derive(Debug, Default)]
pub struct FirstCandidate;

impl Driver for FirstCandidate {
    fn choose(&mut self, _candidates: &[Value]) -> Result<usize, EvalError> {
        Ok(0)
    }

    fn external(&mut self, _symbol: &Name, _args: &[Value]) -> Result<Option<Value>, EvalError> {
        Ok(None)
    }
}

/// Variable environment, scoped like a stack.
#[derive(Debug, Clone, Default)]
pub struct Env {
    bindings: Vec<(Name, Value)>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn bind(&mut self, name: Name, value: Value) {
        self.bindings.push((name, value));
    }

    pub fn unbind(&mut self) {
        self.bindings.pop();
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n.as_ref() == name)
            .map(|(_, v)| v)
    }
}

/// Evaluation context: the state plus an optional direct `Me` binding, which
/// lets the runtime evaluate a module against the global state without
/// materializing the agent view.
pub struct Ctx<'a> {
    pub state: &'a State,
    pub me: Option<&'a AgentId>,
}

impl<'a> Ctx<'a> {
    pub fn new(state: &'a State) -> Self {
        Ctx { state, me: None }
    }

    pub fn with_me(state: &'a State, me: &'a AgentId) -> Self {
        Ctx { state, me: Some(me) }
    }
}

fn num_binop(op: &str, a: &Value, b: &Value) -> Value {
    use Value::{Int, Tick};
    let cmp = |o: std::cmp::Ordering| -> Value {
        Value::Bool(match op {
            ">=" => o.is_ge(),
            "<=" => o.is_le(),
            ">" => o.is_gt(),
            "<" => o.is_lt(),
            _ => unreachable!(),
        })
    };
    match (op, a, b) {
        ("+", Int(x), Int(y)) => Int(x.wrapping_add(*y)),
        ("+", Tick(x), Tick(y)) => Tick(x.saturating_add(*y)),
        ("+", Tick(x), Int(y)) | ("+", Int(y), Tick(x)) => {
            Tick(x.saturating_add_signed(*y))
        }
        ("*", Int(x), Int(y)) => Int(x.wrapping_mul(*y)),
        ("*", Int(x), Tick(y)) | ("*", Tick(y), Int(x)) => {
            if *x < 0 {
                Value::Undef
            } else {
                Tick(y.saturating_mul(*x as u64))
            }
        }
        (">=" | "<=" | ">" | "<", Int(x), Int(y)) => cmp(x.cmp(y)),
        (">=" | "<=" | ">" | "<", Tick(x), Tick(y)) => cmp(x.cmp(y)),
        _ => Value::Undef,
    }
}

/// Structural evaluation of the built-in symbols. Returns `None` when the
/// symbol is not a built-in.
fn eval_builtin(symbol: &str, args: &[Value]) -> Option<Value> {
    Some(match (symbol, args) {
        ("true", []) => Value::TRUE,
        ("false", []) => Value::FALSE,
        ("undef", []) => Value::Undef,
        ("Bool", [v]) => Value::Bool(v.is_bool()),
        ("=", [a, b]) => Value::Bool(a == b),
        ("!=", [a, b]) => Value::Bool(a != b),
        ("and", [a, b]) => Value::Bool(a.is_true() && b.is_true()),
        ("or", [a, b]) => Value::Bool(a.is_true() || b.is_true()),
        ("not", [a]) => Value::Bool(!a.is_true()),
        ("+" | "*" | ">=" | "<=" | ">" | "<", [a, b]) => num_binop(symbol, a, b),
        ("First", [Value::List(items)]) => items.first().cloned().unwrap_or(Value::Undef),
        ("Second", [Value::List(items)]) => items.get(1).cloned().unwrap_or(Value::Undef),
        ("Length", [Value::List(items)]) => Value::Int(items.len() as i64),
        ("First" | "Second" | "Length", [_]) => Value::Undef,
        ("Pair", [a, b]) => Value::List(vec![a.clone(), b.clone()]),
        _ => return None,
    })
}

/// Evaluates `term` in `ctx` under `env`.
pub fn eval_term(
    term: &Term,
    ctx: &Ctx<'_>,
    env: &Env,
    driver: &mut dyn Driver,
) -> Result<Value, EvalError> {
    match term {
        Term::Const(v) => Ok(v.clone()),
        Term::Var(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
        Term::Apply(symbol, arg_terms) => {
            if symbol.as_ref() == "Me" {
                if let Some(me) = ctx.me {
                    return Ok(Value::Agent(me.clone()));
                }
            }
            let sym = ctx
                .state
                .vocabulary()
                .lookup(symbol)
                .ok_or_else(|| EvalError::UnknownSymbol(symbol.clone()))?;
            if sym.arity != arg_terms.len() {
                return Err(EvalError::ArityMismatch {
                    symbol: symbol.clone(),
                    expected: sym.arity,
                    got: arg_terms.len(),
                });
            }
            let mut args = Vec::with_capacity(arg_terms.len());
            for t in arg_terms {
                args.push(eval_term(t, ctx, env, driver)?);
            }
            if let Some(v) = eval_builtin(symbol, &args) {
                return Ok(v);
            }
            if sym.is_external {
                if let Some(v) = driver.external(symbol, &args)? {
                    return Ok(v);
                }
            }
            let loc = Location {
                symbol: symbol.clone(),
                args,
            };
            let v = ctx.state.read(&loc);
            if !sym.is_external {
                driver.note_read(&loc, &v);
            }
            Ok(v)
        }
    }
}

/// Computes the update set of `rule` at `ctx.state` under `env`.
///
/// Choose-rules range over the values materialized in the state; with an
/// empty candidate set the rule yields the empty update set.
pub fn compute_update_set(
    rule: &Rule,
    ctx: &Ctx<'_>,
    env: &mut Env,
    driver: &mut dyn Driver,
) -> Result<UpdateSet, EvalError> {
    match rule {
        Rule::Update {
            symbol,
            args,
            value,
        } => {
            let sym = ctx
                .state
                .vocabulary()
                .lookup(symbol)
                .ok_or_else(|| EvalError::UnknownSymbol(symbol.clone()))?;
            if sym.arity != args.len() {
                return Err(EvalError::ArityMismatch {
                    symbol: symbol.clone(),
                    expected: sym.arity,
                    got: args.len(),
                });
            }
            let mut xs = Vec::with_capacity(args.len());
            for t in args {
                xs.push(eval_term(t, ctx, env, driver)?);
            }
            let y = eval_term(value, ctx, env, driver)?;
            Ok(UpdateSet::singleton(
                Location {
                    symbol: symbol.clone(),
                    args: xs,
                },
                y,
            ))
        }
        Rule::Block(rules) => {
            let mut out = UpdateSet::new();
            for r in rules {
                out.extend(compute_update_set(r, ctx, env, driver)?);
            }
            Ok(out)
        }
        Rule::Cond {
            guard,
            then_rule,
            else_rule,
        } => {
            let g = eval_term(guard, ctx, env, driver)?;
            if g.is_true() {
                compute_update_set(then_rule, ctx, env, driver)
            } else {
                compute_update_set(else_rule, ctx, env, driver)
            }
        }
        Rule::Choose {
            var,
            condition,
            body,
        } => {
            let mut candidates = Vec::new();
            for cand in ctx.state.materialized_universe() {
                env.bind(var.clone(), cand.clone());
                let ok = eval_term(condition, ctx, env, driver)?;
                env.unbind();
                if ok.is_true() {
                    candidates.push(cand);
                }
            }
            if candidates.is_empty() {
                return Ok(UpdateSet::new());
            }
            let picked = driver.choose(&candidates)?;
            if picked >= candidates.len() {
                return Err(EvalError::ResolverOutOfRange {
                    picked,
                    candidates: candidates.len(),
                });
            }
            env.bind(var.clone(), candidates[picked].clone());
            let result = compute_update_set(body, ctx, env, driver);
            env.unbind();
            result
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{FunctionSymbol, Vocabulary};
    use std::sync::Arc;

    fn memory_state() -> State {
        let vocab = Arc::new(
            Vocabulary::new()
                .with(FunctionSymbol::func("Memory", 1))
                .with(FunctionSymbol::relation("MemLocs", 1))
                .with(FunctionSymbol::func("x", 0))
                .with(FunctionSymbol::func("y", 0))
                .with(FunctionSymbol::func("l1", 0))
                .with(FunctionSymbol::func("InitVal", 0))
                .with(FunctionSymbol::external("Fail", 0)),
        );
        let mut s = State::new(vocab);
        s.set(Location::nullary("l1"), Value::sym("l1"));
        s.set(Location::nullary("InitVal"), Value::sym("InitVal"));
        s.set(Location::new("Memory", [Value::sym("l1")]), Value::sym("InitVal"));
        s.set(Location::new("MemLocs", [Value::sym("l1")]), Value::TRUE);
        s
    }

    fn ev(term: &Term, s: &State) -> Value {
        eval_term(term, &Ctx::new(s), &Env::new(), &mut FirstCandidate).unwrap()
    }

    #[test]
    fn logic_constant_true() {
        let s = memory_state();
        assert_eq!(ev(&Term::nullary("true"), &s), Value::TRUE);
    }

    #[test]
    fn memory_initially_initval() {
        let s = memory_state();
        let t = Term::apply("Memory", [Term::nullary("l1")]);
        assert_eq!(ev(&t, &s), Value::sym("InitVal"));
    }

    #[test]
    fn undef_equals_undef() {
        let s = memory_state();
        let t = Term::apply("=", [Term::nullary("undef"), Term::nullary("undef")]);
        assert_eq!(ev(&t, &s), Value::TRUE);
    }

    #[test]
    fn strict_boolean_ops_treat_undef_as_not_true() {
        let s = memory_state();
        let undef = || Term::nullary("undef");
        assert_eq!(ev(&Term::apply("not", [undef()]), &s), Value::TRUE);
        assert_eq!(
            ev(&Term::apply("and", [Term::nullary("true"), undef()]), &s),
            Value::FALSE
        );
        assert_eq!(
            ev(&Term::apply("or", [undef(), Term::nullary("true")]), &s),
            Value::TRUE
        );
    }

    #[test]
    fn application_outside_graph_is_undef() {
        let s = memory_state();
        let t = Term::apply("Memory", [Term::nullary("InitVal")]);
        assert_eq!(ev(&t, &s), Value::Undef);
    }

    #[test]
    fn unknown_symbol_and_unbound_variable_error() {
        let s = memory_state();
        let e = eval_term(
            &Term::nullary("Nope"),
            &Ctx::new(&s),
            &Env::new(),
            &mut FirstCandidate,
        );
        assert!(matches!(e, Err(EvalError::UnknownSymbol(_))));
        let e = eval_term(
            &Term::var("v"),
            &Ctx::new(&s),
            &Env::new(),
            &mut FirstCandidate,
        );
        assert!(matches!(e, Err(EvalError::UnboundVariable(_))));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let s = memory_state();
        let e = eval_term(
            &Term::apply("Memory", []),
            &Ctx::new(&s),
            &Env::new(),
            &mut FirstCandidate,
        );
        assert!(matches!(e, Err(EvalError::ArityMismatch { .. })));
    }

    #[test]
    fn block_unions_and_cond_selects() {
        let s = memory_state();
        let block = Rule::Block(vec![
            Rule::update("x", [], Term::Const(Value::Int(1))),
            Rule::update("y", [], Term::Const(Value::Int(2))),
        ]);
        let u = compute_update_set(&block, &Ctx::new(&s), &mut Env::new(), &mut FirstCandidate)
            .unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!(u.get(&Location::nullary("x")), Some(&Value::Int(1)));
        assert_eq!(u.get(&Location::nullary("y")), Some(&Value::Int(2)));

        let cond = Rule::cond(
            Term::nullary("false"),
            Rule::update("x", [], Term::Const(Value::Int(1))),
            Rule::update("x", [], Term::Const(Value::Int(2))),
        );
        let u = compute_update_set(&cond, &Ctx::new(&s), &mut Env::new(), &mut FirstCandidate)
            .unwrap();
        assert_eq!(u.get(&Location::nullary("x")), Some(&Value::Int(2)));
    }

    #[test]
    fn choose_with_no_candidate_does_nothing() {
        let s = memory_state();
        let r = Rule::choose(
            "p",
            Term::apply("=", [Term::var("p"), Term::Const(Value::Int(99))]),
            Rule::update("x", [], Term::var("p")),
        );
        let u = compute_update_set(&r, &Ctx::new(&s), &mut Env::new(), &mut FirstCandidate)
            .unwrap();
        assert!(u.is_empty());
    }

    #[test]
    fn choose_picks_a_satisfying_candidate() {
        let s = memory_state();
        let r = Rule::choose(
            "p",
            Term::apply(
                "=",
                [
                    Term::apply("MemLocs", [Term::var("p")]),
                    Term::nullary("true"),
                ],
            ),
            Rule::update("x", [], Term::var("p")),
        );
        let u = compute_update_set(&r, &Ctx::new(&s), &mut Env::new(), &mut FirstCandidate)
            .unwrap();
        assert_eq!(u.get(&Location::nullary("x")), Some(&Value::sym("l1")));
    }

    #[test]
    fn resolver_out_of_range_is_an_error() {
        struct Wild;
        impl Driver for Wild {
            fn choose(&mut self, _c: &[Value]) -> Result<usize, EvalError> {
                Ok(7)
            }
            fn external(&mut self, _s: &Name, _a: &[Value]) -> Result<Option<Value>, EvalError> {
                Ok(None)
            }
        }
        let s = memory_state();
        let r = Rule::choose(
            "p",
            Term::apply("MemLocs", [Term::var("p")]),
            Rule::update("x", [], Term::var("p")),
        );
        let e = compute_update_set(&r, &Ctx::new(&s), &mut Env::new(), &mut Wild);
        assert!(matches!(e, Err(EvalError::ResolverOutOfRange { .. })));
    }

    #[test]
    fn list_accessors() {
        let s = memory_state();
        let pair = Term::Const(Value::list([Value::sym("l1"), Value::sym("v1")]));
        assert_eq!(ev(&Term::apply("First", [pair.clone()]), &s), Value::sym("l1"));
        assert_eq!(ev(&Term::apply("Second", [pair.clone()]), &s), Value::sym("v1"));
        assert_eq!(ev(&Term::apply("Length", [pair]), &s), Value::Int(2));
        let single = Term::Const(Value::list([Value::sym("l1")]));
        assert_eq!(ev(&Term::apply("Second", [single]), &s), Value::Undef);
    }

    #[test]
    fn tick_comparison_boundary() {
        let s = memory_state();
        // CT >= X + delta is false one tick before the bound and true at it.
        let bound = Term::apply(
            "+",
            [Term::Const(Value::Tick(3)), Term::Const(Value::Tick(10))],
        );
        let at = Term::apply(">=", [Term::Const(Value::Tick(13)), bound.clone()]);
        let before = Term::apply(">=", [Term::Const(Value::Tick(12)), bound]);
        assert_eq!(ev(&at, &s), Value::TRUE);
        assert_eq!(ev(&before, &s), Value::FALSE);
    }
}
