//! Timed checks: the lossy RPC four-form lemma, the RPC-implementation
//! theorem with its 2δ+ε deadline, and the atomicity discipline of the
//! call/return interface.

use super::extract::{extract_operations, MoveSeq, OperationRecord, ReturnKind};
use super::CheckReport;
use crate::state::Location;
use crate::value::{Tick, Value};

fn describe(op: &OperationRecord) -> String {
    format!(
        "{}({}) by {} at move {}",
        op.procname, op.args, op.caller, op.call_index
    )
}

/// Every operation of the lossy RPC has one of four forms: silently dropped;
/// BadCall within δ of the call; forwarded within δ but never returned;
/// forwarded within δ and relayed within δ of the inner return.
pub fn check_lossy_timing(seq: &MoveSeq<'_>, delta: Tick) -> CheckReport {
    let mut report = CheckReport::new("lossy-forms");
    let ops = match extract_operations(seq) {
        Ok(ops) => ops,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    for op in ops
        .iter()
        .filter(|o| o.callee_component.as_ref() == "lossy_rpc")
    {
        report.bump("ops");
        let call = op.call_tick.unwrap_or(0);
        let inner: Vec<&OperationRecord> = op.children.iter().map(|c| &ops[*c]).collect();
        if inner.len() > 1 {
            report.fail(format!(
                "lossy operation forwarded twice: {}",
                describe(op)
            ));
            continue;
        }
        let forwarded_in_time = inner
            .first()
            .map(|c| c.call_tick.unwrap_or(0) <= call + delta)
            .unwrap_or(false);
        match (inner.first(), op.returned()) {
            (None, false) => report.bump("form-dropped"),
            (None, true) => {
                if op.return_kind == ReturnKind::Exception
                    && op.return_value == Some(Value::sym("BadCall"))
                    && op.return_tick.unwrap_or(0) <= call + delta
                {
                    report.bump("form-badcall");
                } else {
                    report.fail(format!(
                        "return without a forward that is not a timely BadCall: {}",
                        describe(op)
                    ));
                }
            }
            (Some(_), false) => {
                if forwarded_in_time {
                    report.bump("form-forwarded-no-return");
                } else {
                    report.fail(format!(
                        "forward later than δ after the call: {}",
                        describe(op)
                    ));
                }
            }
            (Some(child), true) => {
                let relay_ok = child.returned()
                    && op.return_tick.unwrap_or(0)
                        <= child.return_tick.unwrap_or(0) + delta
                    && op.return_kind == child.return_kind
                    && op.return_value == child.return_value;
                if forwarded_in_time && relay_ok {
                    report.bump("form-relayed");
                } else {
                    report.fail(format!(
                        "relay outside its window or altered: {}",
                        describe(op)
                    ));
                }
            }
        }
    }
    report
}

/// The RPC-implementation theorem: every operation is a relayed BadCall, an
/// RPCFailure with no memory call, an RPCFailure that ignored the memory's
/// return, or a full relay — and every return happens within 2δ+ε of the
/// call.
pub fn check_rpc_impl(seq: &MoveSeq<'_>, delta: Tick, epsilon: Tick) -> CheckReport {
    let mut report = CheckReport::new("impl-forms");
    let bound = 2 * delta + epsilon;
    let ops = match extract_operations(seq) {
        Ok(ops) => ops,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    for op in ops
        .iter()
        .filter(|o| o.callee_component.as_ref() == "rpc_impl")
    {
        if !op.returned() {
            report.bump("open");
            continue;
        }
        report.bump("ops");
        let call = op.call_tick.unwrap_or(0);
        let ret = op.return_tick.unwrap_or(0);
        if ret > call + bound {
            report.fail(format!(
                "return at tick {ret}, later than call + 2δ+ε = {}: {}",
                call + bound,
                describe(op)
            ));
        }
        let lossy: Vec<&OperationRecord> = op.children.iter().map(|c| &ops[*c]).collect();
        if lossy.len() != 1 {
            report.fail(format!(
                "implementation made {} forwards: {}",
                lossy.len(),
                describe(op)
            ));
            continue;
        }
        let lossy_op = lossy[0];
        let memory_op = lossy_op.children.first().map(|c| &ops[*c]);
        let exception = op.return_kind == ReturnKind::Exception;
        let value = op.return_value.clone().unwrap_or(Value::Undef);
        if exception && value == Value::sym("BadCall") {
            report.bump("form-badcall");
            if memory_op.is_some() {
                report.fail(format!(
                    "BadCall though the memory was called: {}",
                    describe(op)
                ));
            }
            if lossy_op.return_value != Some(Value::sym("BadCall")) {
                report.fail(format!(
                    "BadCall not relayed from the lossy RPC: {}",
                    describe(op)
                ));
            }
        } else if exception && value == Value::sym("RPCFailure") {
            // The timeout fires exactly at the deadline.
            if ret != call + bound {
                report.fail(format!(
                    "RPCFailure at tick {ret}, expected exactly call + 2δ+ε = {}: {}",
                    call + bound,
                    describe(op)
                ));
            }
            match memory_op {
                None => report.bump("form-fail-no-memory-call"),
                Some(m) => {
                    if m.returned() {
                        report.bump("form-fail-ignored-return");
                    } else {
                        report.fail(format!(
                            "RPCFailure while the memory operation is still open: {}",
                            describe(op)
                        ));
                    }
                }
            }
        } else {
            report.bump("form-relay");
            let relay_ok = lossy_op.returned()
                && lossy_op.return_kind == op.return_kind
                && lossy_op.return_value == op.return_value;
            if !relay_ok {
                report.fail(format!(
                    "relayed return does not match the lossy RPC's: {}",
                    describe(op)
                ));
            }
            match memory_op {
                None => report.fail(format!(
                    "value relayed without a memory operation: {}",
                    describe(op)
                )),
                Some(m) => {
                    if !m.returned() {
                        report.fail(format!(
                            "value relayed before the memory returned: {}",
                            describe(op)
                        ));
                    }
                }
            }
        }
    }
    report
}

/// Interface discipline: a RETURN writes its six (nine when timed) updates
/// in one move, the reply lands at the agent recorded in the callee's
/// CallSender, and CallReply/CallReplyValue are always written together.
pub fn check_interface_discipline(seq: &MoveSeq<'_>) -> CheckReport {
    let mut report = CheckReport::new("discipline");
    let timed = seq.moves.first().map(|(t, _)| t.is_some()).unwrap_or(false);
    let expected_return_updates = if timed { 9 } else { 6 };
    let mut state = seq.config.initial.clone();
    for (tick, mv) in &seq.moves {
        if let Some(t) = tick {
            state.set(Location::nullary("CT"), Value::Tick(*t));
        }
        for u in mv.updates.iter() {
            if u.location.symbol.as_ref() != "CallReply" || u.value.is_undef() {
                continue;
            }
            report.bump("returns");
            let target = u.location.args[0].clone();
            // The reply routes to the agent stored in the callee's
            // CallSender at the pre-state.
            let sender = state.read(&Location::new(
                "CallSender",
                [Value::Agent(mv.agent.clone())],
            ));
            if sender != target {
                report.fail(format!(
                    "return by {} routed to {target}, but CallSender says {sender} (move {})",
                    mv.agent, mv.index
                ));
            }
            if mv
                .updates
                .get(&Location::new("CallReplyValue", [target.clone()]))
                .is_none()
            {
                report.fail(format!(
                    "CallReply written without CallReplyValue at move {}",
                    mv.index
                ));
            }
            // All interface updates of a return happen in this one move.
            let interface_updates = mv
                .updates
                .iter()
                .filter(|u| {
                    matches!(
                        u.location.symbol.as_ref(),
                        "CallReply"
                            | "CallReplyValue"
                            | "CallSender"
                            | "CallName"
                            | "CallArgs"
                            | "CallMade"
                            | "CallInTime"
                            | "CallOutTime"
                            | "ReturnTime"
                    )
                })
                .count();
            if interface_updates < expected_return_updates {
                report.fail(format!(
                    "return at move {} wrote {interface_updates} interface updates, expected {expected_return_updates}",
                    mv.index
                ));
            }
        }
        if let Ok(next) = crate::state::fire(&state, &mv.updates) {
            state = next;
        }
    }
    report
}
