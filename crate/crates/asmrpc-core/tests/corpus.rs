//! Corpus fidelity: the bundled component programs parse, validate, expand
//! and round-trip, and their expanded rule trees equal the hand-built
//! reference structures.

mod common;

use std::collections::BTreeMap;

use asmrpc_core::components::{
    self, builtin_scenario, builtin_scenario_names, parse_scenario, scenario_program,
    scenario_vocabulary, ComponentKind,
};
use asmrpc_core::dsl::{
    expand_rule, parse_program, render_program, render_rule, validate_program, Severity,
};
use asmrpc_core::term::Rule;

use common::*;

fn all_sources() -> Vec<(&'static str, &'static str)> {
    vec![
        ("macros_untimed", components::MACROS_UNTIMED),
        ("macros_timed", components::MACROS_TIMED),
        ("memory", components::MEMORY_SRC),
        ("caller", components::CALLER_SRC),
        ("rpc", components::RPC_SRC),
        ("memory_impl", components::MEMORY_IMPL_SRC),
        ("lossy_rpc", components::LOSSY_RPC_SRC),
        ("rpc_impl", components::RPC_IMPL_SRC),
        ("recycler", components::RECYCLER_SRC),
    ]
}

#[test]
fn corpus_parses_and_renders_byte_stably() {
    for (name, src) in all_sources() {
        let parsed = parse_program(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        let rendered = render_program(&parsed);
        let reparsed = parse_program(&rendered).unwrap_or_else(|e| panic!("{name} reparse: {e}"));
        assert_eq!(
            render_program(&reparsed),
            rendered,
            "{name}: render not byte-stable"
        );
        // Structure survives the normalization pass.
        for (module, rule) in &parsed.modules {
            let again = &reparsed.modules[module];
            assert!(
                rule.normalized().structurally_eq(&again.normalized()),
                "{name}/{module}: structure changed by round trip"
            );
        }
    }
}

#[test]
fn scenario_programs_validate_cleanly() {
    for name in builtin_scenario_names() {
        let spec = parse_scenario(builtin_scenario(name).unwrap()).unwrap();
        let program = scenario_program(&spec).unwrap_or_else(|e| panic!("{name}: {e}"));
        let vocab = scenario_vocabulary(&spec, &program);
        let errors: Vec<_> = validate_program(&program, &vocab)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
}

fn expand_module(src: &str, macro_lib: &str, module: &str) -> Rule {
    let mut program = parse_program(macro_lib).unwrap();
    program.merge(&parse_program(src).unwrap()).unwrap();
    expand_rule(&program.modules[module], &program.macros).unwrap()
}

#[test]
fn return_macro_expands_to_its_six_updates() {
    let mut program = parse_program(components::MACROS_UNTIMED).unwrap();
    program
        .merge(&parse_program("module m\nRETURN(normal, Ok)\nendmodule\n").unwrap())
        .unwrap();
    let rule = expand_rule(&program.modules["m"], &program.macros).unwrap();
    assert_eq!(rule, return_macro(sym("normal"), sym("Ok")));
    let Rule::Block(items) = &rule else {
        panic!("expected block")
    };
    assert_eq!(items.len(), 6);
}

#[test]
fn timed_return_macro_expands_to_its_nine_updates() {
    let mut program = parse_program(components::MACROS_TIMED).unwrap();
    program
        .merge(&parse_program("module m\nRETURN(exception, BadCall)\nendmodule\n").unwrap())
        .unwrap();
    let rule = expand_rule(&program.modules["m"], &program.macros).unwrap();
    assert_eq!(rule, timed_return_macro(sym("exception"), sym("BadCall")));
    let Rule::Block(items) = &rule else {
        panic!("expected block")
    };
    assert_eq!(items.len(), 9);
}

#[test]
fn fail_macro_expands_to_its_six_updates() {
    let program = parse_program(components::LOSSY_RPC_SRC).unwrap();
    let mut with_use = program.clone();
    with_use
        .merge(&parse_program("module m\nFAIL\nendmodule\n").unwrap())
        .unwrap();
    let rule = expand_rule(&with_use.modules["m"], &with_use.macros).unwrap();
    assert_eq!(rule, fail_macro());
}

#[test]
fn call_macro_expands_to_the_choose_pattern() {
    let mut program = parse_program(components::MACROS_UNTIMED).unwrap();
    program
        .merge(&parse_program("module m\nCALL(GetName, GetArgs, MemComponent)\nendmodule\n").unwrap())
        .unwrap();
    let rule = expand_rule(&program.modules["m"], &program.macros).unwrap();
    assert_eq!(
        rule,
        call_macro(sym("GetName"), sym("GetArgs"), sym("MemComponent"))
    );
}

/// The memory component program, expanded, as a hand-built reference tree.
fn memory_reference() -> Rule {
    let read_args = || app("First", [app("CallArgs", [me()])]);
    let write_val = || app("Second", [app("CallArgs", [me()])]);
    cond(
        eq(app("CallName", [me()]), sym("read")),
        cond(
            eq(app("MemLocs", [read_args()]), sym("false")),
            return_macro(sym("exception"), sym("BadArg")),
            cond(
                sym("Fail"),
                return_macro(sym("exception"), sym("MemFailure")),
                return_macro(sym("normal"), app("Memory", [read_args()])),
            ),
        ),
        cond(
            eq(app("CallName", [me()]), sym("write")),
            cond(
                app(
                    "or",
                    [
                        eq(app("MemLocs", [read_args()]), sym("false")),
                        eq(app("MemVals", [write_val()]), sym("false")),
                    ],
                ),
                return_macro(sym("exception"), sym("BadArg")),
                cond(
                    sym("Fail"),
                    return_macro(sym("exception"), sym("MemFailure")),
                    block([
                        upd("Memory", [read_args()], write_val()),
                        cond(sym("Succeed"), return_macro(sym("normal"), sym("Ok")), skip()),
                    ]),
                ),
            ),
            skip(),
        ),
    )
}

#[test]
fn memory_program_matches_reference_tree() {
    let rule = expand_module(components::MEMORY_SRC, components::MACROS_UNTIMED, "memory");
    assert_eq!(rule, memory_reference());
}

/// The caller program, expanded.
#[test]
fn caller_program_matches_reference_tree() {
    let rule = expand_module(components::CALLER_SRC, components::MACROS_UNTIMED, "caller");
    let expected = cond(
        sym("MakeCall"),
        call_macro(sym("GetName"), sym("GetArgs"), sym("MemComponent")),
        skip(),
    );
    assert_eq!(rule, expected);
}

/// The RPC component program, expanded.
fn rpc_reference() -> Rule {
    let proc = || app("First", [app("CallArgs", [me()])]);
    let args = || app("Second", [app("CallArgs", [me()])]);
    cond(
        eq(app("CallName", [me()]), sym("remotecall")),
        cond(
            ne(app("Length", [args()]), app("ArgNum", [proc()])),
            return_macro(sym("exception"), sym("BadCall")),
            cond(
                eq(app("CallMade", [me()]), sym("false")),
                cond(
                    sym("Fail"),
                    return_macro(sym("exception"), sym("RPCFailure")),
                    call_macro(proc(), args(), sym("Destination")),
                ),
                cond(
                    ne(app("CallReply", [me()]), sym("undef")),
                    cond(
                        sym("Fail"),
                        return_macro(sym("exception"), sym("RPCFailure")),
                        return_macro(app("CallReply", [me()]), app("CallReplyValue", [me()])),
                    ),
                    skip(),
                ),
            ),
        ),
        skip(),
    )
}

#[test]
fn rpc_program_matches_reference_tree() {
    let rule = expand_module(components::RPC_SRC, components::MACROS_UNTIMED, "rpc");
    assert_eq!(rule, rpc_reference());
}

/// The timed CALL as it appears inside the lossy RPC and implementation
/// modules.
fn timed_call_macro(procname: asmrpc_core::term::Term, arglist: asmrpc_core::term::Term, destination: asmrpc_core::term::Term) -> Rule {
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
            upd("CallInTime", [var("p")], sym("CT")),
            upd("ReturnTime", [var("p")], sym("undef")),
            upd("CallOutTime", [me()], sym("CT")),
            upd("CallMade", [me()], sym("true")),
            upd("CallReply", [me()], sym("undef")),
            upd("CallReplyValue", [me()], sym("undef")),
        ]),
    )
}

/// The lossy RPC program, expanded.
fn lossy_rpc_reference() -> Rule {
    let proc = || app("First", [app("CallArgs", [me()])]);
    let args = || app("Second", [app("CallArgs", [me()])]);
    cond(
        eq(app("CallName", [me()]), sym("remotecall")),
        cond(
            app(
                "and",
                [
                    ne(app("CallInTime", [me()]), sym("undef")),
                    eq(app("CallOutTime", [me()]), sym("undef")),
                ],
            ),
            cond(
                app(
                    ">=",
                    [sym("CT"), app("+", [app("CallInTime", [me()]), sym("delta")])],
                ),
                fail_macro(),
                cond(
                    ne(app("Length", [args()]), app("ArgNum", [proc()])),
                    timed_return_macro(sym("exception"), sym("BadCall")),
                    timed_call_macro(proc(), args(), sym("Destination")),
                ),
            ),
            cond(
                ne(app("ReturnTime", [me()]), sym("undef")),
                cond(
                    app(
                        ">=",
                        [sym("CT"), app("+", [app("ReturnTime", [me()]), sym("delta")])],
                    ),
                    fail_macro(),
                    timed_return_macro(app("CallReply", [me()]), app("CallReplyValue", [me()])),
                ),
                skip(),
            ),
        ),
        skip(),
    )
}

#[test]
fn lossy_rpc_program_matches_reference_tree() {
    let rule = expand_module(components::LOSSY_RPC_SRC, components::MACROS_TIMED, "lossy_rpc");
    assert_eq!(rule, lossy_rpc_reference());
}

/// The implementation-over-RPC program, expanded. The forward wraps the
/// incoming call into a remotecall pair so the RPC component's interface is
/// actually exercised.
fn memory_impl_reference() -> Rule {
    let wrap = || {
        app(
            "Pair",
            [app("CallName", [me()]), app("CallArgs", [me()])],
        )
    };
    cond(
        ne(app("CallName", [me()]), sym("undef")),
        cond(
            eq(app("CallMade", [me()]), sym("false")),
            call_macro(sym("remotecall"), wrap(), sym("RPCComponent")),
            cond(
                ne(app("CallReply", [me()]), sym("undef")),
                cond(
                    app(
                        "or",
                        [
                            ne(app("CallReply", [me()]), sym("exception")),
                            ne(app("CallReplyValue", [me()]), sym("RPCFailure")),
                        ],
                    ),
                    return_macro(app("CallReply", [me()]), app("CallReplyValue", [me()])),
                    cond(
                        sym("Retry"),
                        call_macro(sym("remotecall"), wrap(), sym("RPCComponent")),
                        return_macro(sym("exception"), sym("MemFail")),
                    ),
                ),
                skip(),
            ),
        ),
        skip(),
    )
}

#[test]
fn memory_impl_program_matches_reference_tree() {
    let rule = expand_module(
        components::MEMORY_IMPL_SRC,
        components::MACROS_UNTIMED,
        "memory_impl",
    );
    assert_eq!(rule, memory_impl_reference());
}

/// The RPC implementation over the lossy RPC, expanded.
fn rpc_impl_reference() -> Rule {
    let timeout = || {
        app(
            "+",
            [
                app(
                    "+",
                    [
                        app("CallOutTime", [me()]),
                        app("*", [asmrpc_core::term::Term::Const(asmrpc_core::value::Value::Int(2)), sym("delta")]),
                    ],
                ),
                sym("epsilon"),
            ],
        )
    };
    cond(
        ne(app("CallName", [me()]), sym("undef")),
        cond(
            eq(app("CallMade", [me()]), sym("false")),
            timed_call_macro(app("CallName", [me()]), app("CallArgs", [me()]), sym("LossyRPC")),
            cond(
                app(
                    "and",
                    [
                        ne(app("CallReply", [me()]), sym("undef")),
                        app("<=", [app("ReturnTime", [me()]), timeout()]),
                    ],
                ),
                timed_return_macro(app("CallReply", [me()]), app("CallReplyValue", [me()])),
                cond(
                    app(">=", [sym("CT"), timeout()]),
                    timed_return_macro(sym("exception"), sym("RPCFailure")),
                    skip(),
                ),
            ),
        ),
        skip(),
    )
}

#[test]
fn rpc_impl_program_matches_reference_tree() {
    let rule = expand_module(components::RPC_IMPL_SRC, components::MACROS_TIMED, "rpc_impl");
    assert_eq!(rule, rpc_impl_reference());
}

#[test]
fn build_component_returns_the_bundled_sources() {
    assert_eq!(build_component_src(ComponentKind::Memory), components::MEMORY_SRC);
    assert_eq!(
        build_component_src(ComponentKind::ReliableMemory),
        components::MEMORY_SRC
    );
    assert_eq!(build_component_src(ComponentKind::RpcImpl), components::RPC_IMPL_SRC);
}

fn build_component_src(kind: ComponentKind) -> &'static str {
    components::build_component(kind)
}

#[test]
fn single_rule_render_round_trip() {
    let parsed = parse_program(components::MEMORY_SRC).unwrap();
    let rule = &parsed.modules["memory"];
    let text = render_rule(rule);
    let reparsed = asmrpc_core::dsl::parse_rule_text(&text).unwrap();
    assert!(rule.structurally_eq(&reparsed));
}
