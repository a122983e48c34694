//! Shared helpers for the integration tests: term/rule builders mirroring
//! the interface macros, and scenario construction from inline text.

#![allow(dead_code)]

use asmrpc_core::components::{build_scenario, parse_scenario, Built, ScenarioSpec};
use asmrpc_core::runtime::RunConfig;
use asmrpc_core::term::{Rule, Term};
use asmrpc_core::timed::TimedConfig;
use asmrpc_core::value::Value;

pub fn app(f: &str, args: impl Into<Vec<Term>>) -> Term {
    Term::apply(f, args)
}

pub fn sym(f: &str) -> Term {
    Term::nullary(f)
}

pub fn me() -> Term {
    sym("Me")
}

pub fn eq(a: Term, b: Term) -> Term {
    app("=", [a, b])
}

pub fn ne(a: Term, b: Term) -> Term {
    app("!=", [a, b])
}

pub fn var(v: &str) -> Term {
    Term::var(v)
}

pub fn upd(f: &str, args: impl Into<Vec<Term>>, v: Term) -> Rule {
    Rule::update(f, args, v)
}

pub fn block(rules: impl Into<Vec<Rule>>) -> Rule {
    Rule::Block(rules.into())
}

pub fn cond(g: Term, t: Rule, e: Rule) -> Rule {
    Rule::cond(g, t, e)
}

pub fn skip() -> Rule {
    Rule::skip()
}

/// The expansion of the untimed RETURN(type, value) macro.
pub fn return_macro(ty: Term, value: Term) -> Rule {
    block([
        upd("CallReply", [app("CallSender", [me()])], ty),
        upd("CallReplyValue", [app("CallSender", [me()])], value),
        upd("CallSender", [me()], sym("undef")),
        upd("CallName", [me()], sym("undef")),
        upd("CallArgs", [me()], sym("undef")),
        upd("CallMade", [me()], sym("false")),
    ])
}

/// The expansion of the timed RETURN(type, value) macro.
pub fn timed_return_macro(ty: Term, value: Term) -> Rule {
    block([
        upd("CallReply", [app("CallSender", [me()])], ty),
        upd("CallReplyValue", [app("CallSender", [me()])], value),
        upd("ReturnTime", [app("CallSender", [me()])], sym("CT")),
        upd("CallSender", [me()], sym("undef")),
        upd("CallName", [me()], sym("undef")),
        upd("CallArgs", [me()], sym("undef")),
        upd("CallMade", [me()], sym("false")),
        upd("CallInTime", [me()], sym("undef")),
        upd("CallOutTime", [me()], sym("undef")),
    ])
}

/// The expansion of the untimed CALL(procname, arglist, destination) macro,
/// with the choose variable as it appears in the macro body.
pub fn call_macro(procname: Term, arglist: Term, destination: Term) -> Rule {
    Rule::choose(
        "p",
        app(
            "and",
            [
                eq(app("Component", [var("p")]), destination),
                eq(app("CallSender", [var("p")]), sym("undef")),
            ],
        ),
        block([
            upd("CallSender", [var("p")], me()),
            upd("CallName", [var("p")], procname),
            upd("CallArgs", [var("p")], arglist),
            upd("CallMade", [me()], sym("true")),
            upd("CallReply", [me()], sym("undef")),
            upd("CallReplyValue", [me()], sym("undef")),
        ]),
    )
}

/// The expansion of the FAIL abbreviation of the lossy RPC.
pub fn fail_macro() -> Rule {
    block([
        upd("CallName", [me()], sym("false")),
        upd("CallArgs", [me()], sym("false")),
        upd("CallMade", [me()], sym("false")),
        upd("CallInTime", [me()], sym("undef")),
        upd("CallOutTime", [me()], sym("undef")),
        upd("ReturnTime", [me()], sym("undef")),
    ])
}

pub fn scenario(text: &str) -> ScenarioSpec {
    parse_scenario(text).expect("scenario parses")
}

pub fn untimed_config(text: &str) -> RunConfig {
    match build_scenario(&scenario(text)).expect("scenario builds").0 {
        Built::Untimed(c) => c,
        Built::Timed(_) => panic!("expected untimed scenario"),
    }
}

pub fn timed_config(text: &str) -> TimedConfig {
    match build_scenario(&scenario(text)).expect("scenario builds").0 {
        Built::Timed(c) => c,
        Built::Untimed(_) => panic!("expected timed scenario"),
    }
}

pub fn v_sym(s: &str) -> Value {
    Value::sym(s)
}

/// A minimal memory scenario with fully scripted oracles, for deterministic
/// single-operation tests.
pub fn scripted_memory_scenario(
    get_name: &str,
    get_args: &str,
    fail: &str,
    succeed: &str,
    pulses: usize,
) -> String {
    format!(
        "kind = memory\n\
         component.caller = 1\n\
         component.memory = 1\n\
         wire.MemComponent = memory\n\
         memlocs = l1, l2\n\
         memvals = v1, v2\n\
         initval = v1\n\
         argnum.read = 1\n\
         argnum.write = 2\n\
         budget = 100\n\
         policy = roundrobin\n\
         oracle.MakeCall = pulses({pulses})\n\
         oracle.GetName = scripted({get_name})\n\
         oracle.GetArgs = scripted({get_args})\n\
         oracle.Fail = {fail}\n\
         oracle.Succeed = {succeed}\n"
    )
}
