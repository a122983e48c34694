//! The memory interface requirements, checked per top-level operation:
//!
//! * an operation raising BadArg touches the memory not at all;
//! * a successful Read(l) performs exactly one atomic read of l between call
//!   and return (or one-or-more in multi-read mode, which the RPC-backed
//!   implementation satisfies instead);
//! * an unsuccessful Read(l) performs zero or more reads of l;
//! * a successful Write(l,v) performs one or more atomic writes of v to l;
//! * an unsuccessful Write(l,v) performs zero or more such writes;
//! * no event of an operation falls outside its call/return window.

use super::extract::{
    attribute_events_to_top, extract_memory_events, extract_operations, EventKind, MoveSeq,
    OperationRecord, ReturnKind,
};
use super::CheckReport;
use crate::value::Value;

/// Whether a successful read must access the memory exactly once (the plain
/// memory component) or at least once (the RPC-backed implementation, where
/// retries can re-read).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryMode {
    ExactRead,
    MultiRead,
}

fn first_of(v: &Value) -> Value {
    match v {
        Value::List(items) => items.first().cloned().unwrap_or(Value::Undef),
        _ => Value::Undef,
    }
}

fn second_of(v: &Value) -> Value {
    match v {
        Value::List(items) => items.get(1).cloned().unwrap_or(Value::Undef),
        _ => Value::Undef,
    }
}

fn describe(op: &OperationRecord) -> String {
    format!(
        "{}({}) by {} at move {}",
        op.procname, op.args, op.caller, op.call_index
    )
}

pub fn check_memory_semantics(seq: &MoveSeq<'_>, mode: MemoryMode) -> CheckReport {
    let name = match mode {
        MemoryMode::ExactRead => "memory-exact",
        MemoryMode::MultiRead => "memory-multi",
    };
    let mut report = CheckReport::new(name);
    let ops = match extract_operations(seq) {
        Ok(ops) => ops,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    let events = match extract_memory_events(seq) {
        Ok(ev) => ev,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    let trace_len = seq.moves.last().map(|(_, m)| m.index + 1).unwrap_or(0);
    let attribution = attribute_events_to_top(&ops, &events, trace_len);

    for (ev, owner) in events.iter().zip(&attribution) {
        if owner.is_none() {
            report.fail(format!(
                "memory event at move {} by {} belongs to no operation",
                ev.move_index, ev.agent
            ));
        }
    }

    for (idx, op) in ops.iter().enumerate() {
        if op.parent.is_some() {
            continue; // only top-level operations carry the requirements
        }
        report.bump("ops");
        let mine: Vec<_> = events
            .iter()
            .zip(&attribution)
            .filter(|(_, owner)| **owner == Some(idx))
            .map(|(ev, _)| ev)
            .collect();

        // Window discipline: there can be no event outside [call, return].
        let (lo, hi) = op.window(trace_len);
        for ev in &mine {
            if ev.move_index <= lo || ev.move_index > hi {
                report.fail(format!(
                    "event at move {} outside the window of {}",
                    ev.move_index,
                    describe(op)
                ));
            }
        }

        let is_bad_arg = op.return_kind == ReturnKind::Exception
            && op.return_value == Some(Value::sym("BadArg"));
        if is_bad_arg {
            report.bump("badarg");
            if !mine.is_empty() {
                report.fail(format!(
                    "BadArg operation touched the memory: {}",
                    describe(op)
                ));
            }
            continue;
        }

        match &op.procname {
            v if *v == Value::sym("read") => {
                let loc = first_of(&op.args);
                let reads = mine.iter().filter(|e| e.kind == EventKind::Read).count();
                if mine.iter().any(|e| e.kind == EventKind::Write) {
                    report.fail(format!("read operation wrote to memory: {}", describe(op)));
                }
                for ev in &mine {
                    if ev.kind == EventKind::Read && ev.location != loc {
                        report.fail(format!(
                            "read of {} inside an operation on {}: {}",
                            ev.location,
                            loc,
                            describe(op)
                        ));
                    }
                }
                if op.successful() {
                    report.bump("read-ok");
                    let bound_ok = match mode {
                        MemoryMode::ExactRead => reads == 1,
                        MemoryMode::MultiRead => reads >= 1,
                    };
                    if !bound_ok {
                        report.fail(format!(
                            "successful read performed {} atomic reads: {}",
                            reads,
                            describe(op)
                        ));
                    }
                    if mode == MemoryMode::MultiRead && reads >= 2 {
                        report.bump("read-multi");
                    }
                } else if op.returned() {
                    report.bump("read-fail");
                }
            }
            v if *v == Value::sym("write") => {
                let loc = first_of(&op.args);
                let val = second_of(&op.args);
                if mine.iter().any(|e| e.kind == EventKind::Read) {
                    report.fail(format!("write operation read the memory: {}", describe(op)));
                }
                for ev in &mine {
                    if ev.kind == EventKind::Write
                        && (ev.location != loc || ev.value.as_ref() != Some(&val))
                    {
                        report.fail(format!(
                            "write of {:?} to {} inside {}",
                            ev.value,
                            ev.location,
                            describe(op)
                        ));
                    }
                }
                let writes = mine.iter().filter(|e| e.kind == EventKind::Write).count();
                if op.successful() {
                    report.bump("write-ok");
                    if writes == 0 {
                        report.fail(format!(
                            "successful write performed no atomic write: {}",
                            describe(op)
                        ));
                    }
                } else if op.returned() {
                    report.bump("write-fail");
                }
            }
            _ => {
                // Unknown procedures bounce off the interface (BadCall);
                // they must not touch the memory.
                report.bump("other");
                if !mine.is_empty() {
                    report.fail(format!(
                        "operation with unknown procedure touched memory: {}",
                        describe(op)
                    ));
                }
            }
        }
    }
    report
}

/// Every operation must eventually receive its return. For lossy scenarios
/// non-returning operations are legal, so the check degrades to statistics.
pub fn check_liveness(seq: &MoveSeq<'_>, stats_only: bool) -> CheckReport {
    let mut report = CheckReport::new(if stats_only { "liveness-stats" } else { "liveness" });
    let ops = match extract_operations(seq) {
        Ok(ops) => ops,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    for op in &ops {
        report.bump("ops");
        if op.returned() {
            report.bump("returned");
        } else {
            report.bump("open");
            if !stats_only {
                report.fail(format!("operation never returned: {}", describe(op)));
            }
        }
    }
    report
}

/// A reliable memory raises no memory-failure exception, under either name.
pub fn check_reliability(seq: &MoveSeq<'_>) -> CheckReport {
    let mut report = CheckReport::new("reliability");
    let ops = match extract_operations(seq) {
        Ok(ops) => ops,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    for op in &ops {
        if op.return_kind == ReturnKind::Exception {
            let v = op.return_value.clone().unwrap_or(Value::Undef);
            if v == Value::sym("MemFailure") || v == Value::sym("MemFail") {
                report.fail(format!("memory failure surfaced: {}", describe(op)));
            }
        }
        if op.returned() {
            report.bump("returned");
        }
    }
    report
}
