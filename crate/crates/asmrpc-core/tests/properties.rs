//! Property tests: parser/renderer round-trips, the update-set laws of the
//! engine, choose soundness, and the agent-view equivalence.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use asmrpc_core::dsl::{
    self, parse_rule_text, render_rule, DslRule, DslTerm, RuleKind, Span, TermKind,
};
use asmrpc_core::eval::{compute_update_set, Ctx, Driver, Env, EvalError, FirstCandidate};
use asmrpc_core::state::{fire, FunctionSymbol, Location, State, Update, UpdateSet, Vocabulary};
use asmrpc_core::term::{Rule, Term};
use asmrpc_core::value::{Name, Value};

use common::*;

fn t(kind: TermKind) -> DslTerm {
    DslTerm {
        kind,
        span: Span::default(),
    }
}

fn r(kind: RuleKind) -> DslRule {
    DslRule {
        kind,
        span: Span::default(),
    }
}

/// Identifiers safe in the grammar (no keywords, no logic constants).
fn ident() -> impl Strategy<Value = Name> {
    prop::sample::select(vec!["f", "g", "h", "alpha", "Memory", "CallName", "v9"])
        .prop_map(Name::from)
}

fn dsl_term(vars: Vec<Name>) -> impl Strategy<Value = DslTerm> {
    let leaf = prop_oneof![
        (-50i64..50).prop_map(|n| t(TermKind::Int(n))),
        ident().prop_map(|f| t(TermKind::Apply(f, Vec::new()))),
        prop::sample::select(vec!["true", "false", "undef"])
            .prop_map(|c| t(TermKind::Apply(Name::from(c), Vec::new()))),
        if vars.is_empty() {
            Just(t(TermKind::Int(0))).boxed()
        } else {
            prop::sample::select(vars.clone())
                .prop_map(|v| t(TermKind::Var(v)))
                .boxed()
        },
    ];
    leaf.prop_recursive(3, 24, 3, move |inner| {
        prop_oneof![
            (ident(), prop::collection::vec(inner.clone(), 1..3))
                .prop_map(|(f, args)| t(TermKind::Apply(f, args))),
            (
                prop::sample::select(vec!["and", "or", "=", "!=", "+", "*", ">=", "<="]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| t(TermKind::Apply(Name::from(op), vec![a, b]))),
            inner
                .clone()
                .prop_map(|a| t(TermKind::Apply(Name::from("not"), vec![a]))),
            prop::collection::vec((-9i64..9).prop_map(|n| t(TermKind::Int(n))), 0..3)
                .prop_map(|items| t(TermKind::List(items))),
        ]
    })
}

fn dsl_rule() -> impl Strategy<Value = DslRule> {
    let upd = (ident(), prop::collection::vec(dsl_term(vec![]), 0..2), dsl_term(vec![]))
        .prop_map(|(f, args, v)| {
            r(RuleKind::Update {
                symbol: f,
                args,
                value: v,
            })
        });
    upd.prop_recursive(3, 20, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4)
                .prop_map(|rules| r(RuleKind::Block(rules))),
            (dsl_term(vec![]), inner.clone(), inner.clone()).prop_map(|(g, a, b)| {
                r(RuleKind::Cond {
                    guard: g,
                    then_rule: Box::new(a),
                    else_rule: Box::new(b),
                })
            }),
            (dsl_term(vec![Name::from("q")]), inner).prop_map(|(c, body)| {
                r(RuleKind::Choose {
                    var: Name::from("q"),
                    condition: c,
                    body: Box::new(body),
                })
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// parse . render reproduces the normalized tree: nested blocks flatten,
    /// singleton blocks unwrap, everything else survives structurally.
    #[test]
    fn parse_render_is_normalization(rule in dsl_rule()) {
        let rendered = render_rule(&rule);
        let normalized = rule.normalized();
        if let RuleKind::Block(items) = &normalized.kind {
            // A bare block renders as its items; an empty one as nothing.
            // Both re-parse only inside a module body, handled below.
            prop_assume!(!items.is_empty());
        }
        match parse_rule_text(&rendered) {
            Ok(reparsed) => prop_assert!(
                reparsed.structurally_eq(&normalized),
                "render:\n{rendered}\nnormalized: {normalized:?}\nreparsed: {reparsed:?}"
            ),
            Err(e) => prop_assert!(false, "render did not reparse: {e}\n{rendered}"),
        }
    }

    /// Rendering is idempotent through a parse: one normalization pass.
    #[test]
    fn render_parse_render_is_stable(rule in dsl_rule()) {
        let first = render_rule(&rule);
        if first.trim().is_empty() {
            return Ok(());
        }
        let second = render_rule(&parse_rule_text(&first).unwrap());
        prop_assert_eq!(first, second);
    }
}

// --- Engine laws over generated states and rules ---

fn law_vocab() -> Arc<Vocabulary> {
    Arc::new(
        Vocabulary::new()
            .with(FunctionSymbol::func("f", 1))
            .with(FunctionSymbol::func("g", 0))
            .with(FunctionSymbol::relation("rel", 1)),
    )
}

fn small_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::TRUE),
        Just(Value::FALSE),
        Just(Value::Undef),
        (-5i64..5).prop_map(Value::Int),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Value::sym),
    ]
}

fn gen_state() -> impl Strategy<Value = State> {
    prop::collection::vec((small_value(), small_value()), 0..6).prop_map(|entries| {
        let mut s = State::new(law_vocab());
        for (k, v) in entries {
            if v == Value::Undef {
                continue;
            }
            s.set(Location::new("f", [k]), v);
        }
        s
    })
}

fn gen_updates() -> impl Strategy<Value = Vec<Update>> {
    prop::collection::vec(
        (small_value(), small_value()).prop_map(|(k, v)| Update {
            location: Location::new("f", [k]),
            value: v,
        }),
        0..6,
    )
}

fn core_rule_for_laws() -> impl Strategy<Value = Rule> {
    let upd = (small_value(), small_value()).prop_map(|(k, v)| {
        Rule::update("f", [Term::Const(k)], Term::Const(v))
    });
    let leaf = prop_oneof![
        upd,
        Just(Rule::skip()),
        (small_value(), small_value()).prop_map(|(k, v)| Rule::cond(
            Term::apply("=", [Term::apply("f", [Term::Const(k)]), Term::Const(v.clone())]),
            Rule::update("g", [], Term::Const(v)),
            Rule::update("g", [], Term::Const(Value::Int(0))),
        )),
    ];
    prop::collection::vec(leaf, 0..5).prop_map(Rule::Block)
}

fn updates_of(rule: &Rule, state: &State) -> UpdateSet {
    compute_update_set(rule, &Ctx::new(state), &mut Env::new(), &mut FirstCandidate).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// The update set of a block is the union of its parts' update sets.
    #[test]
    fn block_union_law(state in gen_state(), rules in prop::collection::vec(core_rule_for_laws(), 0..4)) {
        let block = Rule::Block(rules.clone());
        let whole = updates_of(&block, &state);
        let mut union = UpdateSet::new();
        for r in &rules {
            union.extend(updates_of(r, &state));
        }
        prop_assert_eq!(whole, union);
    }

    /// Firing changes exactly the updated locations.
    #[test]
    fn frame_law(state in gen_state(), updates in gen_updates()) {
        let set = UpdateSet::from_updates(updates);
        prop_assume!(set.is_consistent());
        let next = fire(&state, &set).unwrap();
        for (loc, _) in state.locations() {
            if set.get(loc).is_none() {
                prop_assert_eq!(state.read(loc), next.read(loc), "frame violated at {}", loc);
            }
        }
        for u in set.iter() {
            prop_assert_eq!(next.read(&u.location), u.value.clone());
        }
    }

    /// Clash reporting depends only on the set, not on update order.
    #[test]
    fn clash_symmetry(state in gen_state(), updates in gen_updates(), seed in 0u64..64) {
        let forward = UpdateSet::from_updates(updates.clone());
        let mut shuffled = updates;
        // Cheap deterministic shuffle.
        if !shuffled.is_empty() {
            let n = shuffled.len();
            for i in 0..n {
                shuffled.swap(i, (seed as usize + i * 7) % n);
            }
        }
        let backward = UpdateSet::from_updates(shuffled);
        prop_assert_eq!(forward.is_consistent(), backward.is_consistent());
        prop_assert_eq!(fire(&state, &forward).is_ok(), fire(&state, &backward).is_ok());
    }

    /// A choose produces what its body produces at some satisfying
    /// candidate; with no candidate it does nothing.
    #[test]
    fn choose_soundness(state in gen_state(), target in small_value(), pick in 0usize..4) {
        let rule = Rule::choose(
            "q",
            Term::apply("=", [
                Term::apply("f", [Term::var("q")]),
                Term::Const(target.clone()),
            ]),
            Rule::update("g", [], Term::var("q")),
        );
        struct Pick(usize);
        impl Driver for Pick {
            fn choose(&mut self, c: &[Value]) -> Result<usize, EvalError> {
                Ok(self.0.min(c.len() - 1))
            }
            fn external(&mut self, _: &Name, _: &[Value]) -> Result<Option<Value>, EvalError> {
                Ok(None)
            }
        }
        let produced = compute_update_set(
            &rule,
            &Ctx::new(&state),
            &mut Env::new(),
            &mut Pick(pick),
        ).unwrap();
        let candidates: Vec<Value> = state
            .materialized_universe()
            .into_iter()
            .filter(|cand| state.read(&Location::new("f", [cand.clone()])) == target)
            .collect();
        if candidates.is_empty() {
            prop_assert!(produced.is_empty());
        } else {
            let matches_some = candidates.iter().any(|cand| {
                produced == UpdateSet::singleton(Location::nullary("g"), cand.clone())
            });
            prop_assert!(matches_some, "produced {produced:?} not from any candidate");
        }
    }

    /// Evaluation with a fixed driver is a pure function.
    #[test]
    fn evaluation_is_pure(state in gen_state(), rule in core_rule_for_laws()) {
        let a = updates_of(&rule, &state);
        let b = updates_of(&rule, &state);
        prop_assert_eq!(a, b);
    }
}

/// Firing a module at its agent view produces the same update set as firing
/// at the global state with Me bound directly.
#[test]
fn agent_view_equals_global_evaluation() {
    let cfg = untimed_config(&scripted_memory_scenario(
        "read",
        "[l1]",
        "constant(false)",
        "constant(true)",
        1,
    ));
    let trace = asmrpc_core::runtime::run(&cfg, 5).unwrap();
    // State after the caller's move: the memory agent has a pending call.
    let state = asmrpc_core::runtime::state_after(&cfg, &trace, 1);
    let agent = asmrpc_core::value::AgentId::new("memory.0");
    let module = cfg.module_of(&agent).unwrap().clone();
    let symbols = &cfg.module_symbols[&Name::from("memory")];

    let view = asmrpc_core::state::agent_view(&state, &agent, symbols).unwrap();
    struct FailFalse;
    impl Driver for FailFalse {
        fn choose(&mut self, _: &[Value]) -> Result<usize, EvalError> {
            Ok(0)
        }
        fn external(&mut self, s: &Name, _: &[Value]) -> Result<Option<Value>, EvalError> {
            Ok(Some(match s.as_ref() {
                "Fail" => Value::FALSE,
                "Succeed" => Value::TRUE,
                _ => Value::FALSE,
            }))
        }
    }
    let via_view =
        compute_update_set(&module, &Ctx::new(&view), &mut Env::new(), &mut FailFalse).unwrap();
    let via_global = compute_update_set(
        &module,
        &Ctx::with_me(&state, &agent),
        &mut Env::new(),
        &mut FailFalse,
    )
    .unwrap();
    assert_eq!(via_view, via_global);
    assert!(!via_view.is_empty());
}

/// The view binds Me and excludes other modules' symbols.
#[test]
fn agent_view_reduct_and_me_binding() {
    let cfg = untimed_config(&scripted_memory_scenario(
        "read",
        "[l1]",
        "constant(false)",
        "constant(true)",
        1,
    ));
    let agent = asmrpc_core::value::AgentId::new("memory.0");
    let symbols = &cfg.module_symbols[&Name::from("memory")];
    let view = asmrpc_core::state::agent_view(&cfg.initial, &agent, symbols).unwrap();
    assert_eq!(
        view.read_nullary("Me"),
        Value::Agent(agent.clone()),
        "view binds Me to the agent"
    );
    // Component is not mentioned by the memory module, so the reduct
    // excludes its graph.
    assert!(view.vocabulary().lookup("Component").is_none());
    let not_agent = asmrpc_core::state::agent_view(
        &cfg.initial,
        &asmrpc_core::value::AgentId::new("nobody.9"),
        symbols,
    );
    assert!(not_agent.is_err());
}

/// Macro hygiene under adversarial parameter and binder names.
#[test]
fn macro_hygiene_with_adversarial_names() {
    for arg_var in ["p", "q", "p_1"] {
        let text = format!(
            "macro M(dest)\nchoose p satisfying Component(p) = dest\nTaken(p) := true\nendchoose\nendmacro\n\
             module m\nchoose {arg_var} satisfying Free({arg_var})\nM(Owner({arg_var}))\nendchoose\nendmodule\n"
        );
        let program = dsl::parse_program(&text).unwrap();
        let rule = dsl::expand_rule(&program.modules["m"], &program.macros).unwrap();
        let Rule::Choose { var: outer, body, .. } = &rule else {
            panic!()
        };
        let Rule::Choose {
            var: inner,
            condition,
            ..
        } = body.as_ref()
        else {
            panic!()
        };
        // The inner binder never captures the outer variable mentioned in
        // the substituted argument.
        let Term::Apply(_, eq_args) = condition else { panic!() };
        let Term::Apply(_, owner_args) = &eq_args[1] else { panic!() };
        assert_eq!(owner_args[0], Term::Var(outer.clone()));
        assert_ne!(inner, outer);
    }
}

// Keep BTreeMap import used even if strategies shift.
#[allow(dead_code)]
type _Unused = BTreeMap<Name, Name>;
