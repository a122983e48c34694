//! The RPC component's allowed behaviors, per operation: raise BadCall with
//! no inner call; forward once and relay the return verbatim; forward once
//! and raise RPCFailure; or raise RPCFailure without forwarding.

use super::extract::{extract_operations, MoveSeq, OperationRecord, ReturnKind};
use super::CheckReport;
use crate::value::Value;

fn describe(op: &OperationRecord) -> String {
    format!(
        "{}({}) by {} at move {}",
        op.procname, op.args, op.caller, op.call_index
    )
}

pub fn check_rpc_semantics(seq: &MoveSeq<'_>) -> CheckReport {
    let mut report = CheckReport::new("rpc-forms");
    let ops = match extract_operations(seq) {
        Ok(ops) => ops,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    for op in ops.iter().filter(|o| o.callee_component.as_ref() == "rpc") {
        if !op.returned() {
            // Trace ended mid-operation; window checks still ran elsewhere.
            report.bump("open");
            continue;
        }
        report.bump("ops");
        let exception = op.return_kind == ReturnKind::Exception;
        let value = op.return_value.clone().unwrap_or(Value::Undef);
        let inner: Vec<&OperationRecord> = op.children.iter().map(|c| &ops[*c]).collect();
        if inner.len() > 1 {
            report.fail(format!(
                "RPC operation made {} inner calls: {}",
                inner.len(),
                describe(op)
            ));
            continue;
        }
        if exception && value == Value::sym("BadCall") {
            report.bump("form-badcall");
            if !inner.is_empty() {
                report.fail(format!(
                    "BadCall raised after an inner call: {}",
                    describe(op)
                ));
            }
        } else if exception && value == Value::sym("RPCFailure") {
            if inner.is_empty() {
                report.bump("form-fail-silent");
            } else {
                report.bump("form-fail-after-call");
                if !inner[0].returned() {
                    report.fail(format!(
                        "RPCFailure raised while the inner call is outstanding: {}",
                        describe(op)
                    ));
                }
            }
        } else {
            // The relayed form: the inner return, type and value verbatim.
            report.bump("form-relay");
            match inner.first() {
                None => report.fail(format!(
                    "relayed return without an inner call: {}",
                    describe(op)
                )),
                Some(child) => {
                    if child.return_kind != op.return_kind
                        || child.return_value != op.return_value
                    {
                        report.fail(format!(
                            "relay altered the return ({:?} {:?} vs {:?} {:?}): {}",
                            child.return_kind,
                            child.return_value,
                            op.return_kind,
                            op.return_value,
                            describe(op)
                        ));
                    }
                }
            }
        }
    }
    report
}
