//! Sequential execution of distributed machines: per-agent programs fired
//! one move at a time, external functions answered by oracles, every move
//! logged so a trace can be replayed and checked for coherence.

mod enumerate;
mod oracle;
mod replay;
pub(crate) mod run;
pub mod trace_io;

pub use enumerate::{enumerate_runs, enumerate_runs_with, EnumCaps, EnumStats, ExplosionGuard};
pub use oracle::{Fairness, OracleSpec, OracleTable};
pub use replay::{
    check_run_validity, replay_move, state_after, ReplayedMove, Violation, ViolationKind,
};
pub use run::{fire_agent, run, ProbeMode, RunError};

use std::collections::{BTreeMap, BTreeSet};

use crate::dsl::ProgramDef;
use crate::state::{State, UpdateSet};
use crate::term::Rule;
use crate::value::{AgentId, Name, Tick, Value};

/// Scheduling policy for picking among enabled agents (untimed runs) or for
/// drawing wake-up delays (timed runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchedulerPolicy {
    /// Uniformly random among enabled agents, seeded.
    #[default]
    Random,
    /// Cycle through agents in order; reproducible worst-casing.
    RoundRobin,
    /// Timed runs only: fire every agent the moment it becomes enabled.
    Prompt,
}

impl SchedulerPolicy {
    pub fn parse(s: &str) -> Option<SchedulerPolicy> {
        match s {
            "random" => Some(SchedulerPolicy::Random),
            "roundrobin" => Some(SchedulerPolicy::RoundRobin),
            "prompt" => Some(SchedulerPolicy::Prompt),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerPolicy::Random => "random",
            SchedulerPolicy::RoundRobin => "roundrobin",
            SchedulerPolicy::Prompt => "prompt",
        }
    }
}

/// Everything needed to execute a scenario: the program, the agent-to-module
/// assignment, the initial state, and the oracle environment.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// The merged source program (macros unexpanded), kept for reporting.
    pub program: ProgramDef,
    /// Expanded, executable rule per module.
    pub modules: BTreeMap<Name, Rule>,
    /// Symbols mentioned by each module, for agent views.
    pub module_symbols: BTreeMap<Name, BTreeSet<Name>>,
    /// Agent to module-name assignment (the Component function).
    pub agents: BTreeMap<AgentId, Name>,
    pub initial: State,
    /// Oracle specs keyed by symbol, or `module:symbol` for a per-component
    /// instance of a shared external function.
    pub oracles: BTreeMap<Name, OracleSpec>,
    /// Externals consumed per move even in timed runs (the workload:
    /// MakeCall, GetName, GetArgs); all other externals become timelines
    /// there.
    pub workload: BTreeSet<Name>,
    /// Workload symbols gated on the reading agent being idle, so one pulse
    /// drives at most one operation (MakeCall).
    pub gated: BTreeSet<Name>,
    pub policy: SchedulerPolicy,
    pub budget: usize,
    /// Digest of the canonical scenario text this config was built from.
    pub config_digest: u64,
}

impl RunConfig {
    pub fn module_of(&self, agent: &AgentId) -> Option<&Rule> {
        self.agents.get(agent).and_then(|m| self.modules.get(m))
    }

    /// True when the agent has issued a call and not yet received its reply.
    pub fn agent_busy(state: &State, agent: &AgentId) -> bool {
        let a = Value::Agent(agent.clone());
        let made = state.read(&crate::state::Location::new("CallMade", [a.clone()]));
        let reply = state.read(&crate::state::Location::new("CallReply", [a]));
        made.is_true() && reply.is_undef()
    }
}

/// One external-function reading consumed by a move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reading {
    pub symbol: Name,
    pub args: Vec<Value>,
    pub value: Value,
}

/// One recorded move of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub index: usize,
    pub agent: AgentId,
    pub updates: UpdateSet,
    pub reads: Vec<Reading>,
    pub pre_digest: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// No agent was enabled (and, for timed runs, nothing was scheduled).
    Quiescent,
    BudgetExhausted,
    HorizonReached,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::Quiescent => "quiescent",
            StopReason::BudgetExhausted => "budget",
            StopReason::HorizonReached => "horizon",
        }
    }
}

/// A completed sequential run.
#[derive(Debug, Clone)]
pub struct Trace {
    pub config_digest: u64,
    pub seed: u64,
    pub policy: SchedulerPolicy,
    pub moves: Vec<Move>,
    pub final_digest: u64,
    pub stop: StopReason,
}

/// Entry of a timed trace: a move at a tick, or an external-function change
/// scheduled by the environment.
#[derive(Debug, Clone)]
pub enum TimedEntry {
    Move { tick: Tick, mv: Move },
    OracleEvent { tick: Tick, symbol: Name, value: Value },
}

impl TimedEntry {
    pub fn tick(&self) -> Tick {
        match self {
            TimedEntry::Move { tick, .. } => *tick,
            TimedEntry::OracleEvent { tick, .. } => *tick,
        }
    }
}

/// A completed timed run.
#[derive(Debug, Clone)]
pub struct TimedTrace {
    pub config_digest: u64,
    pub seed: u64,
    pub delta: Tick,
    pub epsilon: Tick,
    pub horizon: Tick,
    pub entries: Vec<TimedEntry>,
    pub final_digest: u64,
    pub stop: StopReason,
}

impl TimedTrace {
    pub fn moves(&self) -> impl Iterator<Item = (Tick, &Move)> {
        self.entries.iter().filter_map(|e| match e {
            TimedEntry::Move { tick, mv } => Some((*tick, mv)),
            _ => None,
        })
    }
}
