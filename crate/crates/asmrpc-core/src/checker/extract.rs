//! Recovering operations and memory events from traces.
//!
//! A CALL shows up in a move as `CallSender(p) := <the mover>`; a RETURN as
//! `CallReply(q) := normal|exception`. Reads of the Memory function are not
//! visible in update sets, so they are recovered by replaying each move
//! against its reconstructed pre-state and logging every Memory application
//! evaluated on the taken control path.

use std::collections::BTreeMap;

use crate::runtime::{replay_move, Move, RunConfig, TimedTrace, Trace};
use crate::state::{fire, Location, State};
use crate::value::{AgentId, Name, Tick, Value};

/// A uniform view of a trace: moves with optional ticks, over a config.
pub struct MoveSeq<'a> {
    pub config: &'a RunConfig,
    pub moves: Vec<(Option<Tick>, Move)>,
}

impl<'a> MoveSeq<'a> {
    pub fn from_trace(config: &'a RunConfig, trace: &Trace) -> Self {
        MoveSeq {
            config,
            moves: trace.moves.iter().map(|m| (None, m.clone())).collect(),
        }
    }

    pub fn from_timed_trace(config: &'a RunConfig, trace: &TimedTrace) -> Self {
        MoveSeq {
            config,
            moves: trace
                .moves()
                .map(|(t, m)| (Some(t), m.clone()))
                .collect(),
        }
    }

    /// Pre-states of every move, by forward reconstruction. Timed moves get
    /// CT set to their tick; oracle events of timed traces are external
    /// symbols, reconstructed here only if logged as updates (they are not),
    /// so replay relies on logged readings and CT.
    fn pre_states(&self) -> Vec<State> {
        let mut out = Vec::with_capacity(self.moves.len());
        let mut state = self.config.initial.clone();
        for (tick, mv) in &self.moves {
            if let Some(t) = tick {
                state.set(Location::nullary("CT"), Value::Tick(*t));
            }
            out.push(state.clone());
            if let Ok(next) = fire(&state, &mv.updates) {
                state = next;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    Normal,
    Exception,
    /// The operation never received its return.
    Open,
}

/// A procedure call and (when present) its corresponding return.
#[derive(Debug, Clone)]
pub struct OperationRecord {
    pub caller: AgentId,
    pub callee: AgentId,
    pub callee_component: Name,
    pub procname: Value,
    pub args: Value,
    pub call_index: usize,
    pub call_tick: Option<Tick>,
    pub return_index: Option<usize>,
    pub return_tick: Option<Tick>,
    pub return_kind: ReturnKind,
    pub return_value: Option<Value>,
    /// The operation this one serves (the open operation at the caller when
    /// the call was issued), if any.
    pub parent: Option<usize>,
    /// Operations spawned while serving this one, in call order.
    pub children: Vec<usize>,
}

impl OperationRecord {
    pub fn successful(&self) -> bool {
        self.return_kind == ReturnKind::Normal
    }

    pub fn returned(&self) -> bool {
        self.return_kind != ReturnKind::Open
    }

    /// Move-index window of the operation, up to trace end while open.
    pub fn window(&self, trace_len: usize) -> (usize, usize) {
        (self.call_index, self.return_index.unwrap_or(trace_len))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed trace at move {move_index}: {message}")]
pub struct MalformedTrace {
    pub move_index: usize,
    pub message: String,
}

/// Extracts all operations of a trace. Every CALL pattern opens a record;
/// every RETURN pattern closes the unique open record of the replied-to
/// caller. Records still open at trace end keep `ReturnKind::Open`.
pub fn extract_operations(seq: &MoveSeq<'_>) -> Result<Vec<OperationRecord>, MalformedTrace> {
    let mut ops: Vec<OperationRecord> = Vec::new();
    // Open operation per callee agent (an agent serves one call at a time)
    // and per caller agent (an agent has at most one outstanding call).
    let mut serving: BTreeMap<AgentId, usize> = BTreeMap::new();
    let mut waiting: BTreeMap<AgentId, usize> = BTreeMap::new();

    for (pos, (tick, mv)) in seq.moves.iter().enumerate() {
        let mover = &mv.agent;
        // RETURN first: CallReply(q) := normal | exception.
        for u in mv.updates.iter() {
            if u.location.symbol.as_ref() != "CallReply" || u.value.is_undef() {
                continue;
            }
            let Some(Value::Agent(target)) = u.location.args.first().cloned() else {
                continue;
            };
            // A CALL resets the caller's own CallReply to undef; skipped by
            // the is_undef test above. Everything else is a return.
            let op_idx = waiting.remove(&target).ok_or_else(|| MalformedTrace {
                move_index: pos,
                message: format!("return to {target} with no open call"),
            })?;
            if ops[op_idx].callee != *mover {
                return Err(MalformedTrace {
                    move_index: pos,
                    message: format!(
                        "return to {target} issued by {mover}, expected {}",
                        ops[op_idx].callee
                    ),
                });
            }
            serving.remove(mover);
            let value = mv
                .updates
                .get(&Location::new(
                    "CallReplyValue",
                    [Value::Agent(target.clone())],
                ))
                .cloned();
            ops[op_idx].return_index = Some(mv.index);
            ops[op_idx].return_tick = *tick;
            ops[op_idx].return_kind = if u.value == Value::sym("normal") {
                ReturnKind::Normal
            } else {
                ReturnKind::Exception
            };
            ops[op_idx].return_value = value;
        }
        // Recycling: CallSender(a) := undef written by someone other than
        // `a` abandons the call `a` was serving. The operation record stays
        // open; the agent becomes choosable again.
        for u in mv.updates.iter() {
            if u.location.symbol.as_ref() != "CallSender" || !u.value.is_undef() {
                continue;
            }
            if let Some(Value::Agent(freed)) = u.location.args.first() {
                if freed != mover {
                    serving.remove(freed);
                }
            }
        }
        // CALL: CallSender(p) := <mover>.
        for u in mv.updates.iter() {
            if u.location.symbol.as_ref() != "CallSender" {
                continue;
            }
            if u.value != Value::Agent(mover.clone()) {
                continue; // a RETURN clears the callee's own CallSender
            }
            let Some(Value::Agent(callee)) = u.location.args.first().cloned() else {
                continue;
            };
            if serving.contains_key(&callee) {
                return Err(MalformedTrace {
                    move_index: pos,
                    message: format!("call to {callee}, which is already serving a call"),
                });
            }
            let procname = mv
                .updates
                .get(&Location::new("CallName", [Value::Agent(callee.clone())]))
                .cloned()
                .unwrap_or(Value::Undef);
            let args = mv
                .updates
                .get(&Location::new("CallArgs", [Value::Agent(callee.clone())]))
                .cloned()
                .unwrap_or(Value::Undef);
            let callee_component = seq
                .config
                .agents
                .get(&callee)
                .cloned()
                .unwrap_or_else(|| "unknown".into());
            let parent = serving.get(mover).copied();
            let idx = ops.len();
            ops.push(OperationRecord {
                caller: mover.clone(),
                callee: callee.clone(),
                callee_component,
                procname,
                args,
                call_index: mv.index,
                call_tick: *tick,
                return_index: None,
                return_tick: None,
                return_kind: ReturnKind::Open,
                return_value: None,
                parent,
                children: Vec::new(),
            });
            if let Some(p) = parent {
                ops[p].children.push(idx);
            }
            // A caller that timed out on its previous call abandons it; the
            // old record stays open and this call supersedes it.
            waiting.insert(mover.clone(), idx);
            serving.insert(callee, idx);
        }
    }
    Ok(ops)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Read,
    Write,
}

/// An atomic access to the Memory function.
#[derive(Debug, Clone)]
pub struct MemoryEvent {
    pub kind: EventKind,
    pub location: Value,
    /// The written value (writes only).
    pub value: Option<Value>,
    pub move_index: usize,
    pub tick: Option<Tick>,
    pub agent: AgentId,
}

/// Extracts all memory events: writes from update sets, reads by replaying
/// each move and logging the Memory applications its taken control path
/// evaluated.
pub fn extract_memory_events(seq: &MoveSeq<'_>) -> Result<Vec<MemoryEvent>, MalformedTrace> {
    let mut events = Vec::new();
    let pre_states = seq.pre_states();
    for (pos, (tick, mv)) in seq.moves.iter().enumerate() {
        let module = seq.config.module_of(&mv.agent).ok_or_else(|| MalformedTrace {
            move_index: pos,
            message: format!("agent {} has no module", mv.agent),
        })?;
        let replayed = replay_move(&pre_states[pos], module, mv).ok_or_else(|| MalformedTrace {
            move_index: pos,
            message: format!("move {} cannot be replayed", mv.index),
        })?;
        for (loc, _value) in &replayed.reads {
            if loc.symbol.as_ref() == "Memory" {
                events.push(MemoryEvent {
                    kind: EventKind::Read,
                    location: loc.args.first().cloned().unwrap_or(Value::Undef),
                    value: None,
                    move_index: mv.index,
                    tick: *tick,
                    agent: mv.agent.clone(),
                });
            }
        }
        for u in mv.updates.iter() {
            if u.location.symbol.as_ref() == "Memory" {
                events.push(MemoryEvent {
                    kind: EventKind::Write,
                    location: u.location.args.first().cloned().unwrap_or(Value::Undef),
                    value: Some(u.value.clone()),
                    move_index: mv.index,
                    tick: *tick,
                    agent: mv.agent.clone(),
                });
            }
        }
    }
    Ok(events)
}

/// Maps each memory event to the top-level operation it serves, following
/// the chain: the event's agent serves some operation, whose caller serves
/// another, up to an operation issued by an environment agent.
pub fn attribute_events_to_top(
    ops: &[OperationRecord],
    events: &[MemoryEvent],
    trace_len: usize,
) -> Vec<Option<usize>> {
    // Serving intervals per agent.
    let mut intervals: BTreeMap<&AgentId, Vec<(usize, usize, usize)>> = BTreeMap::new();
    for (idx, op) in ops.iter().enumerate() {
        let (lo, hi) = op.window(trace_len);
        intervals.entry(&op.callee).or_default().push((lo, hi, idx));
    }
    events
        .iter()
        .map(|ev| {
            let mut op_idx = intervals.get(&ev.agent).and_then(|spans| {
                spans
                    .iter()
                    .find(|(lo, hi, _)| *lo < ev.move_index && ev.move_index <= *hi)
                    .map(|(_, _, idx)| *idx)
            })?;
            while let Some(parent) = ops[op_idx].parent {
                op_idx = parent;
            }
            Some(op_idx)
        })
        .collect()
}
