//! Exhaustive small-instance enumeration: completeness against the seeded
//! runner, choose-branch coverage, and the explosion guard.

mod common;

use asmrpc_core::checker::{extract_operations, MoveSeq, ReturnKind};
use asmrpc_core::runtime::{enumerate_runs, run, EnumCaps, ExplosionGuard, Move};
use asmrpc_core::value::Value;

use common::*;

fn move_identity(moves: &[Move]) -> String {
    moves
        .iter()
        .map(|m| {
            format!(
                "{}|{:?}|{:?}",
                m.agent,
                m.updates,
                m.reads
                    .iter()
                    .map(|r| format!("{}={}", r.symbol, r.value))
                    .collect::<Vec<_>>()
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

#[test]
fn depth_zero_yields_exactly_one_empty_trace() {
    let cfg = untimed_config(&scripted_memory_scenario(
        "read",
        "[l1]",
        "constant(false)",
        "constant(true)",
        1,
    ));
    let (traces, stats) = enumerate_runs(&cfg, 0, EnumCaps::default()).unwrap();
    assert_eq!(traces.len(), 1);
    assert!(traces[0].moves.is_empty());
    assert_eq!(stats.traces, 1);
}

#[test]
fn scripted_read_enumerates_to_normal_returns_only() {
    // One caller, one memory agent, a single scripted read of l1 with Fail
    // pinned false: every maximal trace ends in a normal return of the
    // initial value.
    let cfg = untimed_config(&scripted_memory_scenario(
        "read",
        "[l1]",
        "constant(false)",
        "constant(true)",
        1,
    ));
    let (traces, _) = enumerate_runs(&cfg, 2, EnumCaps::default()).unwrap();
    assert!(!traces.is_empty() && traces.len() <= 4);
    for trace in &traces {
        let seq = MoveSeq::from_trace(&cfg, trace);
        let ops = extract_operations(&seq).unwrap();
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].return_kind, ReturnKind::Normal);
        assert_eq!(ops[0].return_value, Some(Value::sym("v1")));
    }
}

#[test]
fn both_choose_branches_appear_with_two_free_callees() {
    let text = scripted_memory_scenario("read", "[l1]", "constant(false)", "constant(true)", 1)
        .replace("component.memory = 1", "component.memory = 2");
    let cfg = untimed_config(&text);
    let (traces, _) = enumerate_runs(&cfg, 1, EnumCaps::default()).unwrap();
    // Depth 1: just the caller's move, choosing either memory agent.
    assert_eq!(traces.len(), 2);
    let callees: Vec<bool> = traces
        .iter()
        .map(|t| {
            t.moves[0]
                .updates
                .iter()
                .any(|u| u.location.args.first() == Some(&Value::agent("memory.0")))
        })
        .collect();
    assert!(callees.contains(&true) && callees.contains(&false));
}

#[test]
fn every_seeded_run_appears_in_the_enumeration() {
    let cfg = untimed_config(asmrpc_core::components::builtin_scenario("enum-tiny").unwrap());
    let depth = 8;
    let (traces, _) = enumerate_runs(&cfg, depth, EnumCaps::default()).unwrap();
    let identities: std::collections::BTreeSet<String> = traces
        .iter()
        .map(|t| move_identity(&t.moves))
        .collect();
    for seed in 0..40u64 {
        let mut run_cfg = cfg.clone();
        run_cfg.budget = depth;
        let trace = run(&run_cfg, seed).unwrap();
        let id = move_identity(&trace.moves);
        assert!(
            identities.contains(&id),
            "seed {seed} produced a trace the enumerator missed:\n{id}"
        );
    }
}

#[test]
fn explosion_guard_trips_on_tiny_caps() {
    let cfg = untimed_config(asmrpc_core::components::builtin_scenario("enum-tiny").unwrap());
    let result = enumerate_runs(
        &cfg,
        10,
        EnumCaps {
            max_traces: 3,
            max_nodes: 1_000_000,
        },
    );
    assert!(matches!(result, Err(ExplosionGuard::Traces { .. })));
}

#[test]
fn enumeration_count_is_stable_across_repetitions() {
    let cfg = untimed_config(asmrpc_core::components::builtin_scenario("enum-tiny").unwrap());
    let (_, a) = enumerate_runs(&cfg, 6, EnumCaps::default()).unwrap();
    let (_, b) = enumerate_runs(&cfg, 6, EnumCaps::default()).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.nodes, b.nodes);
    assert!(a.traces > 0);
}
