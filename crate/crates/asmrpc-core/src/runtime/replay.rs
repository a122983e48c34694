//! Trace replay and coherence checking.
//!
//! Each move is re-executed against the reconstructed pre-state using the
//! logged oracle readings; the logged update set must be reproducible for
//! some resolution of the choose-rules. The matching execution also yields
//! the locations the move actually read, which the property checkers use to
//! count atomic memory accesses.

use std::collections::BTreeMap;

use super::{Move, RunConfig, Trace};
use crate::eval::{compute_update_set, Ctx, Driver, Env, EvalError};
use crate::state::{fire, Location, State, UpdateSet};
use crate::term::Rule;
use crate::value::{Name, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Move indices are not 0,1,2,... in trace order.
    Ordering,
    /// Logged pre-state digest does not match the reconstruction.
    PreStateDigest,
    /// The logged update set is not reproducible from the pre-state.
    Coherence,
    /// The logged update set is internally inconsistent.
    Inconsistent,
    /// The firing agent is not an agent of the configuration.
    UnknownAgent,
    /// Final state digest mismatch.
    FinalState,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub kind: ViolationKind,
    pub move_index: Option<usize>,
    pub message: String,
}

/// A successfully replayed move: the update set it reproduces plus every
/// location read on the taken control path, in evaluation order.
#[derive(Debug, Clone)]
pub struct ReplayedMove {
    pub updates: UpdateSet,
    pub reads: Vec<(Location, Value)>,
}

/// Serves logged readings; explores choose resolutions by script.
struct ReplayDriver<'a> {
    logged: &'a BTreeMap<(Name, Vec<Value>), Value>,
    script: &'a [usize],
    cursor: usize,
    /// (options, taken) per decision point hit.
    trail: Vec<usize>,
    reads: Vec<(Location, Value)>,
}

impl Driver for ReplayDriver<'_> {
    fn choose(&mut self, candidates: &[Value]) -> Result<usize, EvalError> {
        let taken = if self.cursor < self.script.len() {
            self.script[self.cursor]
        } else {
            0
        };
        self.cursor += 1;
        self.trail.push(candidates.len());
        Ok(taken.min(candidates.len().saturating_sub(1)))
    }

    fn external(&mut self, symbol: &Name, args: &[Value]) -> Result<Option<Value>, EvalError> {
        let key = (symbol.clone(), args.to_vec());
        match self.logged.get(&key) {
            Some(v) => Ok(Some(v.clone())),
            // Unlogged reading: fall through to the state. Timed timelines
            // live there; for an untimed gated workload read the location is
            // unset, and undef steers the same not-true branch as the false
            // the gate served.
            None => Ok(None),
        }
    }

    fn note_read(&mut self, location: &Location, value: &Value) {
        self.reads.push((location.clone(), value.clone()));
    }
}

/// Re-executes `mv` against `pre`, searching choose resolutions for one that
/// reproduces the logged update set. Returns `None` if no resolution does.
pub fn replay_move(pre: &State, module: &Rule, mv: &Move) -> Option<ReplayedMove> {
    let logged: BTreeMap<(Name, Vec<Value>), Value> = mv
        .reads
        .iter()
        .map(|r| ((r.symbol.clone(), r.args.clone()), r.value.clone()))
        .collect();

    fn search(
        pre: &State,
        module: &Rule,
        mv: &Move,
        logged: &BTreeMap<(Name, Vec<Value>), Value>,
        script: Vec<usize>,
    ) -> Option<ReplayedMove> {
        let mut driver = ReplayDriver {
            logged,
            script: &script,
            cursor: 0,
            trail: Vec::new(),
            reads: Vec::new(),
        };
        let ctx = Ctx::with_me(pre, &mv.agent);
        let updates = compute_update_set(module, &ctx, &mut Env::new(), &mut driver).ok()?;
        if updates == mv.updates {
            return Some(ReplayedMove {
                updates,
                reads: driver.reads,
            });
        }
        // Branch over the first decision point beyond the forced prefix.
        let depth = script.len();
        if depth < driver.trail.len() {
            let options = driver.trail[depth];
            for i in 1..options {
                let mut next = script.clone();
                next.push(i);
                if let Some(found) = search(pre, module, mv, logged, next) {
                    return Some(found);
                }
            }
        }
        None
    }

    search(pre, module, mv, &logged, Vec::new())
}

/// Replays a whole trace, confirming move numbering, pre-state digests,
/// update-set consistency and coherence (the logged update set is what the
/// agent's module produces at the reconstructed pre-state).
pub fn check_run_validity(config: &RunConfig, trace: &Trace) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut state = config.initial.clone();
    for (pos, mv) in trace.moves.iter().enumerate() {
        if mv.index != pos {
            violations.push(Violation {
                kind: ViolationKind::Ordering,
                move_index: Some(pos),
                message: format!("move at position {pos} carries index {}", mv.index),
            });
        }
        if mv.pre_digest != state.digest() {
            violations.push(Violation {
                kind: ViolationKind::PreStateDigest,
                move_index: Some(pos),
                message: format!(
                    "pre-state digest {:016x} logged, {:016x} reconstructed",
                    mv.pre_digest,
                    state.digest()
                ),
            });
        }
        if let Some((loc, a, b)) = mv.updates.find_clash() {
            violations.push(Violation {
                kind: ViolationKind::Inconsistent,
                move_index: Some(pos),
                message: format!("update set clashes at {loc}: {a} vs {b}"),
            });
        }
        match config.module_of(&mv.agent) {
            None => violations.push(Violation {
                kind: ViolationKind::UnknownAgent,
                move_index: Some(pos),
                message: format!("agent {} has no module", mv.agent),
            }),
            Some(module) => {
                if replay_move(&state, module, mv).is_none() {
                    violations.push(Violation {
                        kind: ViolationKind::Coherence,
                        move_index: Some(pos),
                        message: format!(
                            "logged update set of move {pos} is not reproducible from its pre-state"
                        ),
                    });
                }
            }
        }
        // Advance by the logged updates regardless, to keep later moves
        // meaningful to check.
        if let Ok(next) = fire(&state, &mv.updates) {
            state = next;
        }
    }
    if state.digest() != trace.final_digest {
        violations.push(Violation {
            kind: ViolationKind::FinalState,
            move_index: None,
            message: format!(
                "final digest {:016x} logged, {:016x} reconstructed",
                trace.final_digest,
                state.digest()
            ),
        });
    }
    violations
}

/// Reconstructs the state after the first `n` moves of a trace.
pub fn state_after(config: &RunConfig, trace: &Trace, n: usize) -> State {
    let mut state = config.initial.clone();
    for mv in trace.moves.iter().take(n) {
        if let Ok(next) = fire(&state, &mv.updates) {
            state = next;
        }
    }
    state
}
