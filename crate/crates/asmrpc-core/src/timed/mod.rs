//! Real-time simulation over a discrete global clock.
//!
//! Time is integer ticks. Between events the state is constant; at a tick,
//! scheduled oracle events change external functions first, then every agent
//! whose wake-up time has arrived fires, one move at a time, until the tick
//! is quiescent. The clock then jumps to the next wake-up, scheduled event
//! or deadline crossing (a `CT >= f(Me) + c` guard becoming true), so
//! deadline guards enable exactly at their boundary tick.

mod checks;
mod simulate;

pub use checks::{check_prerun, check_timed_run, state_at, Side};
pub use simulate::{simulate_timed, TimedError};

use std::collections::BTreeMap;

use crate::eval::{eval_term, Ctx, Env, FirstCandidate};
use crate::runtime::RunConfig;
use crate::state::State;
use crate::term::{Rule, Term};
use crate::value::{Name, Tick, Value};

/// Timing parameters: the relay deadline and the downstream return bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingParams {
    pub delta: Tick,
    pub epsilon: Tick,
}

/// A timed scenario: the base configuration plus clock parameters and the
/// per-module wake-delay ranges the scheduler draws from.
#[derive(Debug, Clone)]
pub struct TimedConfig {
    pub base: RunConfig,
    pub delta: Tick,
    pub epsilon: Tick,
    pub horizon: Tick,
    /// Inclusive wake-delay range per module; missing modules are prompt.
    pub delays: BTreeMap<Name, (Tick, Tick)>,
}

impl TimedConfig {
    pub fn timing(&self) -> TimingParams {
        TimingParams {
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }
}

/// A time function read under a `CT >= f(Me) + offset` guard. While
/// `f(agent)` holds a tick `t`, the agent may become enabled at `t + offset`
/// without any other event happening.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadlineSensitivity {
    pub time_fn: Name,
    pub offset: Tick,
}

/// Extracts the deadline sensitivities of a module rule by scanning its
/// guards for comparisons of CT against `f(Me)` plus constants. The constant
/// part is evaluated against `initial` (where delta and epsilon live).
pub fn deadline_sensitivities(rule: &Rule, initial: &State) -> Vec<DeadlineSensitivity> {
    let mut out = Vec::new();
    walk_rule(rule, initial, &mut out);
    out.sort_by(|a, b| (&a.time_fn, a.offset).cmp(&(&b.time_fn, b.offset)));
    out.dedup();
    out
}

fn walk_rule(rule: &Rule, initial: &State, out: &mut Vec<DeadlineSensitivity>) {
    match rule {
        Rule::Update { args, value, .. } => {
            for t in args {
                walk_term(t, initial, out);
            }
            walk_term(value, initial, out);
        }
        Rule::Block(rules) => {
            for r in rules {
                walk_rule(r, initial, out);
            }
        }
        Rule::Cond {
            guard,
            then_rule,
            else_rule,
        } => {
            walk_term(guard, initial, out);
            walk_rule(then_rule, initial, out);
            walk_rule(else_rule, initial, out);
        }
        Rule::Choose {
            condition, body, ..
        } => {
            walk_term(condition, initial, out);
            walk_rule(body, initial, out);
        }
    }
}

fn walk_term(term: &Term, initial: &State, out: &mut Vec<DeadlineSensitivity>) {
    if let Term::Apply(op, args) = term {
        if op.as_ref() == ">=" && args.len() == 2 {
            if let Term::Apply(ct, ct_args) = &args[0] {
                if ct.as_ref() == "CT" && ct_args.is_empty() {
                    if let Some(s) = sensitivity_of_bound(&args[1], initial) {
                        out.push(s);
                    }
                }
            }
        }
        for a in args {
            walk_term(a, initial, out);
        }
    }
}

/// Decomposes `f(Me) + c1 + c2...` (any association) into the time function
/// and the summed constant offset.
fn sensitivity_of_bound(bound: &Term, initial: &State) -> Option<DeadlineSensitivity> {
    let mut leaves = Vec::new();
    flatten_sum(bound, &mut leaves);
    let mut time_fn = None;
    let mut offset: Tick = 0;
    let ctx = Ctx::new(initial);
    for leaf in leaves {
        if let Term::Apply(f, args) = leaf {
            if args.len() == 1 {
                if let Term::Apply(me, me_args) = &args[0] {
                    if me.as_ref() == "Me" && me_args.is_empty() {
                        if time_fn.replace(f.clone()).is_some() {
                            return None; // two time functions in one bound
                        }
                        continue;
                    }
                }
            }
        }
        match eval_term(leaf, &ctx, &Env::new(), &mut FirstCandidate) {
            Ok(Value::Tick(t)) => offset += t,
            Ok(Value::Int(n)) if n >= 0 => offset += n as Tick,
            _ => return None,
        }
    }
    time_fn.map(|f| DeadlineSensitivity {
        time_fn: f,
        offset,
    })
}

fn flatten_sum<'a>(term: &'a Term, out: &mut Vec<&'a Term>) {
    match term {
        Term::Apply(op, args) if op.as_ref() == "+" && args.len() == 2 => {
            flatten_sum(&args[0], out);
            flatten_sum(&args[1], out);
        }
        _ => out.push(term),
    }
}
