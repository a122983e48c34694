//! Exhaustive enumeration of sequential runs at small depth: every scheduler
//! choice, every choose resolution and every oracle valuation. Serves as the
//! brute-force oracle for the interface lemmas.

use std::collections::{BTreeMap, BTreeSet};

use super::{Move, OracleSpec, Reading, RunConfig, SchedulerPolicy, StopReason, Trace};
use crate::eval::{compute_update_set, Ctx, Driver, Env, EvalError};
use crate::state::{fire, Fnv64, State};
use crate::term::Rule;
use crate::value::{Name, Value};

#[derive(Debug, Clone, Copy)]
pub struct EnumCaps {
    pub max_traces: usize,
    pub max_nodes: usize,
}

impl Default for EnumCaps {
    fn default() -> Self {
        EnumCaps {
            max_traces: 200_000,
            max_nodes: 2_000_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExplosionGuard {
    #[error("enumeration exceeded the node cap ({nodes} nodes visited)")]
    Nodes { nodes: usize },
    #[error("enumeration exceeded the trace cap ({traces} traces emitted)")]
    Traces { traces: usize },
    #[error("clash while enumerating: {0}")]
    Clash(String),
    #[error("evaluation failed while enumerating: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Default)]
pub struct EnumStats {
    /// Distinct maximal traces emitted.
    pub traces: usize,
    /// Duplicate move sequences suppressed.
    pub duplicates: usize,
    /// Search-tree nodes visited.
    pub nodes: usize,
}

/// Cursor and fairness bookkeeping per oracle stream; cloned along branches.
#[derive(Clone)]
struct EnumOracles<'a> {
    specs: &'a BTreeMap<Name, OracleSpec>,
    cursors: BTreeMap<Name, usize>,
    fair_runs: BTreeMap<Name, u32>,
}

impl<'a> EnumOracles<'a> {
    fn new(specs: &'a BTreeMap<Name, OracleSpec>) -> Self {
        EnumOracles {
            specs,
            cursors: BTreeMap::new(),
            fair_runs: BTreeMap::new(),
        }
    }

    /// Per-component stream (`module:symbol`) takes precedence.
    fn resolve(&self, module: &Name, symbol: &Name) -> Result<Name, EvalError> {
        let qualified: Name = format!("{module}:{symbol}").into();
        if self.specs.contains_key(&qualified) {
            return Ok(qualified);
        }
        if self.specs.contains_key(symbol) {
            return Ok(symbol.clone());
        }
        Err(EvalError::MissingOracle(symbol.clone()))
    }

    fn options(&self, symbol: &Name) -> Result<Vec<Value>, EvalError> {
        let spec = self
            .specs
            .get(symbol)
            .ok_or_else(|| EvalError::MissingOracle(symbol.clone()))?;
        let cursor = self.cursors.get(symbol).copied().unwrap_or(0);
        let fair_run = self.fair_runs.get(symbol).copied().unwrap_or(0);
        Ok(spec.alphabet(cursor, fair_run))
    }

    fn progressing(&self, symbol: &Name) -> bool {
        match self.specs.get(symbol) {
            Some(OracleSpec::Scripted(vs)) => {
                self.cursors.get(symbol).copied().unwrap_or(0) + 1 < vs.len()
            }
            Some(OracleSpec::Constant(_)) => false,
            Some(OracleSpec::Random { .. }) => true,
            None => false,
        }
    }

    fn commit(&mut self, symbol: &Name, value: &Value) {
        *self.cursors.entry(symbol.clone()).or_insert(0) += 1;
        let fair = match self.specs.get(symbol) {
            Some(OracleSpec::Random { fair: Some(f), .. }) => Some(f.value.clone()),
            _ => None,
        };
        let run = self.fair_runs.entry(symbol.clone()).or_insert(0);
        *run = if fair.as_ref() == Some(value) { 0 } else { *run + 1 };
    }
}

/// One possible firing of one agent: updates plus the decisions behind them.
struct Outcome {
    updates: crate::state::UpdateSet,
    readings: Vec<Reading>,
    consumed: Vec<(Name, Value)>,
    fresh: bool,
}

impl Outcome {
    fn enabled(&self, state: &State) -> bool {
        !self.updates.is_empty() && (!state.is_fixpoint(&self.updates) || self.fresh)
    }
}

/// Replays a decision script; records the branching degree of each decision
/// point it passes.
struct EnumDriver<'a, 'b> {
    oracles: &'b EnumOracles<'a>,
    gated: &'a BTreeSet<Name>,
    module: &'b Name,
    busy: bool,
    script: &'b [usize],
    cursor: usize,
    trail: Vec<usize>,
    frozen: BTreeMap<(Name, Vec<Value>), Value>,
    readings: Vec<Reading>,
    consumed: Vec<(Name, Value)>,
    fresh: bool,
}

impl EnumDriver<'_, '_> {
    fn decide(&mut self, options: usize) -> usize {
        let taken = if self.cursor < self.script.len() {
            self.script[self.cursor]
        } else {
            0
        };
        self.cursor += 1;
        self.trail.push(options);
        taken.min(options.saturating_sub(1))
    }
}

impl Driver for EnumDriver<'_, '_> {
    fn choose(&mut self, candidates: &[Value]) -> Result<usize, EvalError> {
        Ok(self.decide(candidates.len()))
    }

    fn external(&mut self, symbol: &Name, args: &[Value]) -> Result<Option<Value>, EvalError> {
        let key = (symbol.clone(), args.to_vec());
        if let Some(v) = self.frozen.get(&key) {
            return Ok(Some(v.clone()));
        }
        let value = if self.gated.contains(symbol) && self.busy {
            Value::FALSE
        } else {
            let key = self.oracles.resolve(self.module, symbol)?;
            let options = self.oracles.options(&key)?;
            let picked = self.decide(options.len());
            let v = options[picked].clone();
            if self.oracles.progressing(&key) {
                self.fresh = true;
            }
            self.consumed.push((key, v.clone()));
            v
        };
        self.frozen.insert(key, value.clone());
        self.readings.push(Reading {
            symbol: symbol.clone(),
            args: args.to_vec(),
            value: value.clone(),
        });
        Ok(Some(value))
    }
}

/// Enumerates every firing outcome of one agent at one state.
fn agent_outcomes(
    state: &State,
    agent: &crate::value::AgentId,
    module_name: &Name,
    module: &Rule,
    config: &RunConfig,
    oracles: &EnumOracles<'_>,
) -> Result<Vec<Outcome>, EvalError> {
    let busy = RunConfig::agent_busy(state, agent);
    let mut out = Vec::new();
    let mut scripts: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(script) = scripts.pop() {
        let mut driver = EnumDriver {
            oracles,
            gated: &config.gated,
            module: module_name,
            busy,
            script: &script,
            cursor: 0,
            trail: Vec::new(),
            frozen: BTreeMap::new(),
            readings: Vec::new(),
            consumed: Vec::new(),
            fresh: false,
        };
        let ctx = Ctx::with_me(state, agent);
        let updates = compute_update_set(module, &ctx, &mut Env::new(), &mut driver)?;
        // Queue the alternatives of every decision point first taken here.
        for d in script.len()..driver.trail.len() {
            for opt in 1..driver.trail[d] {
                let mut extended = script.clone();
                extended.resize(d, 0);
                extended.push(opt);
                scripts.push(extended);
            }
        }
        out.push(Outcome {
            updates,
            readings: driver.readings,
            consumed: driver.consumed,
            fresh: driver.fresh,
        });
    }
    Ok(out)
}

fn trace_identity(moves: &[Move]) -> u64 {
    let mut h = Fnv64::new();
    for mv in moves {
        h.update(mv.agent.as_str().as_bytes());
        h.update(b"|");
        for u in mv.updates.iter() {
            h.update(u.location.to_string().as_bytes());
            h.update(b"=");
            h.update(u.value.to_string().as_bytes());
            h.update(b",");
        }
        for r in &mv.reads {
            h.update(r.symbol.as_bytes());
            h.update(b"=");
            h.update(r.value.to_string().as_bytes());
            h.update(b",");
        }
        h.update(b";");
    }
    h.finish()
}

struct Search<'a, F> {
    config: &'a RunConfig,
    depth: usize,
    caps: EnumCaps,
    emit: F,
    seen: BTreeSet<u64>,
    stats: EnumStats,
}

impl<F: FnMut(&Trace)> Search<'_, F> {
    fn emit_trace(&mut self, moves: &[Move], state: &State, stop: StopReason) -> Result<(), ExplosionGuard> {
        let id = trace_identity(moves);
        if !self.seen.insert(id) {
            self.stats.duplicates += 1;
            return Ok(());
        }
        self.stats.traces += 1;
        if self.stats.traces > self.caps.max_traces {
            return Err(ExplosionGuard::Traces {
                traces: self.stats.traces,
            });
        }
        let trace = Trace {
            config_digest: self.config.config_digest,
            seed: 0,
            policy: SchedulerPolicy::RoundRobin,
            moves: moves.to_vec(),
            final_digest: state.digest(),
            stop,
        };
        (self.emit)(&trace);
        Ok(())
    }

    fn explore(
        &mut self,
        state: &State,
        oracles: &EnumOracles<'_>,
        moves: &mut Vec<Move>,
    ) -> Result<(), ExplosionGuard> {
        self.stats.nodes += 1;
        if self.stats.nodes > self.caps.max_nodes {
            return Err(ExplosionGuard::Nodes {
                nodes: self.stats.nodes,
            });
        }
        if moves.len() >= self.depth {
            return self.emit_trace(moves, state, StopReason::BudgetExhausted);
        }
        let mut fired = false;
        for (agent, module_name) in &self.config.agents {
            let module = &self.config.modules[module_name];
            for outcome in agent_outcomes(state, agent, module_name, module, self.config, oracles)?
            {
                if !outcome.enabled(state) {
                    continue;
                }
                fired = true;
                let next = fire(state, &outcome.updates)
                    .map_err(|e| ExplosionGuard::Clash(e.to_string()))?;
                let mut next_oracles = oracles.clone();
                for (sym, val) in &outcome.consumed {
                    next_oracles.commit(sym, val);
                }
                moves.push(Move {
                    index: moves.len(),
                    agent: agent.clone(),
                    updates: outcome.updates,
                    reads: outcome.readings,
                    pre_digest: state.digest(),
                });
                let result = self.explore(&next, &next_oracles, moves);
                moves.pop();
                result?;
            }
        }
        if !fired {
            self.emit_trace(moves, state, StopReason::Quiescent)?;
        }
        Ok(())
    }
}

/// Streams every sequential run of length at most `depth` to `emit`:
/// all scheduler choices, all choose resolutions, all oracle valuations,
/// deduplicated by move-sequence identity. Runs that quiesce earlier are
/// emitted at their natural length.
pub fn enumerate_runs_with<F: FnMut(&Trace)>(
    config: &RunConfig,
    depth: usize,
    caps: EnumCaps,
    emit: F,
) -> Result<EnumStats, ExplosionGuard> {
    let oracles = EnumOracles::new(&config.oracles);
    let mut search = Search {
        config,
        depth,
        caps,
        emit,
        seen: BTreeSet::new(),
        stats: EnumStats::default(),
    };
    let state = config.initial.clone();
    search.explore(&state, &oracles, &mut Vec::new())?;
    Ok(search.stats)
}

/// Collects the enumerated traces into a vector.
pub fn enumerate_runs(
    config: &RunConfig,
    depth: usize,
    caps: EnumCaps,
) -> Result<(Vec<Trace>, EnumStats), ExplosionGuard> {
    let mut traces = Vec::new();
    let stats = enumerate_runs_with(config, depth, caps, |t| traces.push(t.clone()))?;
    Ok((traces, stats))
}
