//! Trace-level property checks: operations are extracted from the CALL and
//! RETURN update patterns, memory events are recovered by replay, and the
//! interface requirements of each component are verified per operation.

mod extract;
mod memory;
mod rpc;
mod timing;

pub use extract::{
    extract_memory_events, extract_operations, EventKind, MalformedTrace, MemoryEvent, MoveSeq,
    OperationRecord, ReturnKind,
};
pub use memory::{check_liveness, check_memory_semantics, check_reliability, MemoryMode};
pub use rpc::check_rpc_semantics;
pub use timing::{check_interface_discipline, check_lossy_timing, check_rpc_impl};

use std::collections::BTreeMap;

use crate::components::ScenarioKind;
use crate::runtime::{check_run_validity, trace_io, RunConfig, TimedTrace, Trace};
use crate::timed::{check_prerun, check_timed_run, TimedConfig};

/// Outcome of one named check over one trace.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// One line per finding; empty when everything passed.
    pub details: Vec<String>,
    pub stats: BTreeMap<String, u64>,
    pub counterexample: Option<Counterexample>,
}

/// A failing check always carries a standalone, replayable trace.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub description: String,
    pub trace_text: String,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: true,
            details: Vec::new(),
            stats: BTreeMap::new(),
            counterexample: None,
        }
    }

    pub fn fail(&mut self, detail: String) {
        self.passed = false;
        self.details.push(detail);
    }

    pub fn bump(&mut self, key: &str) {
        *self.stats.entry(key.to_string()).or_insert(0) += 1;
    }

    pub fn attach_counterexample(&mut self, trace_text: String) {
        if !self.passed && self.counterexample.is_none() {
            self.counterexample = Some(Counterexample {
                description: self.details.first().cloned().unwrap_or_default(),
                trace_text,
            });
        }
    }

    /// The one-line report format: name, verdict, counts.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("{}: {}", self.name, verdict);
        for (k, v) in &self.stats {
            line.push_str(&format!(" {k}={v}"));
        }
        if let Some(first) = self.details.first() {
            if !self.passed {
                line.push_str(&format!(" ({first})"));
            }
        }
        line
    }
}

/// The checks that apply to traces of each scenario kind.
pub fn checks_for(kind: ScenarioKind) -> Vec<&'static str> {
    match kind {
        ScenarioKind::Memory => vec!["validity", "discipline", "memory-exact", "liveness"],
        ScenarioKind::ReliableMemory => vec![
            "validity",
            "discipline",
            "memory-exact",
            "liveness",
            "reliability",
        ],
        ScenarioKind::MemoryImpl => vec![
            "validity",
            "discipline",
            "memory-multi",
            "rpc-forms",
            "liveness",
        ],
        ScenarioKind::LossyRpc => vec![
            "prerun",
            "timed-run",
            "discipline",
            "lossy-forms",
            "liveness-stats",
        ],
        ScenarioKind::RpcImpl => vec![
            "prerun",
            "timed-run",
            "discipline",
            "lossy-forms",
            "impl-forms",
            "liveness-stats",
        ],
        ScenarioKind::Custom => vec!["validity"],
    }
}

pub fn known_check(name: &str) -> bool {
    [
        "validity",
        "prerun",
        "timed-run",
        "discipline",
        "memory-exact",
        "memory-multi",
        "rpc-forms",
        "lossy-forms",
        "impl-forms",
        "liveness",
        "liveness-stats",
        "reliability",
    ]
    .contains(&name)
}

/// Runs one named check against an untimed trace.
pub fn run_check(name: &str, config: &RunConfig, trace: &Trace) -> CheckReport {
    let seq = MoveSeq::from_trace(config, trace);
    let mut report = match name {
        "validity" => {
            let mut r = CheckReport::new("validity");
            for v in check_run_validity(config, trace) {
                r.fail(v.message);
            }
            r
        }
        "discipline" => check_interface_discipline(&seq),
        "memory-exact" => check_memory_semantics(&seq, MemoryMode::ExactRead),
        "memory-multi" => check_memory_semantics(&seq, MemoryMode::MultiRead),
        "rpc-forms" => check_rpc_semantics(&seq),
        "liveness" => check_liveness(&seq, false),
        "liveness-stats" => check_liveness(&seq, true),
        "reliability" => check_reliability(&seq),
        other => {
            let mut r = CheckReport::new(other);
            r.fail(format!("check `{other}` does not apply to untimed traces"));
            r
        }
    };
    report.attach_counterexample(trace_io::write_trace(trace));
    report
}

/// Runs one named check against a timed trace.
pub fn run_timed_check(name: &str, config: &TimedConfig, trace: &TimedTrace) -> CheckReport {
    let seq = MoveSeq::from_timed_trace(&config.base, trace);
    let mut report = match name {
        "prerun" => {
            let mut r = CheckReport::new("prerun");
            for v in check_prerun(config, trace) {
                r.fail(v.message);
            }
            r
        }
        "timed-run" => {
            let mut r = CheckReport::new("timed-run");
            for v in check_timed_run(config, trace) {
                r.fail(v.message);
            }
            r
        }
        "discipline" => check_interface_discipline(&seq),
        "lossy-forms" => check_lossy_timing(&seq, config.delta),
        "impl-forms" => check_rpc_impl(&seq, config.delta, config.epsilon),
        "liveness" => check_liveness(&seq, false),
        "liveness-stats" => check_liveness(&seq, true),
        "memory-exact" => check_memory_semantics(&seq, MemoryMode::ExactRead),
        "memory-multi" => check_memory_semantics(&seq, MemoryMode::MultiRead),
        other => {
            let mut r = CheckReport::new(other);
            r.fail(format!("check `{other}` does not apply to timed traces"));
            r
        }
    };
    report.attach_counterexample(trace_io::write_timed_trace(trace));
    report
}
