//! The sequential runner: probe agents, pick an enabled one, fire it.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Move, OracleTable, Reading, RunConfig, SchedulerPolicy, StopReason, Trace};
use crate::eval::{compute_update_set, Ctx, Driver, Env, EvalError};
use crate::state::{fire, FireError, Location, State, UpdateSet};
use crate::term::Rule;
use crate::value::{AgentId, Name, Value};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("inconsistent update set at {location} (move {})", trace.moves.len())]
    Clash {
        location: Location,
        /// The moves completed before the clash.
        trace: Box<Trace>,
    },
    #[error("evaluation failed for agent {agent}: {source}")]
    Eval {
        agent: AgentId,
        #[source]
        source: EvalError,
    },
    #[error("agent {agent} violated relation typing: {source}")]
    Fire {
        agent: AgentId,
        #[source]
        source: FireError,
    },
}

/// What a probe of one agent produced.
pub(crate) struct Probe {
    pub updates: UpdateSet,
    pub readings: Vec<Reading>,
    /// Symbols whose stream must advance if this probe is committed.
    pub consumed: Vec<Name>,
    /// Whether any consumed reading came from a stream that still progresses.
    pub fresh: bool,
}

impl Probe {
    /// Enabled: the update set is non-empty and either changes the state or
    /// consumes input the environment can still vary. A pure fixpoint over
    /// constant readings is a stutter and counts as not enabled.
    pub fn enabled(&self, state: &State) -> bool {
        !self.updates.is_empty() && (!state.is_fixpoint(&self.updates) || self.fresh)
    }
}

/// How externals are served: untimed runs read everything through oracle
/// streams; timed runs only consume the workload symbols and read the rest
/// (the piecewise-constant timelines) from the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    Untimed,
    Timed,
}

struct ProbeDriver<'a> {
    oracles: &'a mut OracleTable,
    rng: &'a mut ChaCha8Rng,
    module: &'a Name,
    mode: ProbeMode,
    busy: bool,
    config: &'a RunConfig,
    frozen: BTreeMap<(Name, Vec<Value>), Value>,
    readings: Vec<Reading>,
    consumed: Vec<Name>,
    fresh: bool,
}

impl ProbeDriver<'_> {
    /// Resolves `symbol` to a stream key: a per-component instance
    /// (`module:symbol`) takes precedence over the shared symbol.
    fn stream_key(&self, symbol: &Name) -> Result<Name, EvalError> {
        let qualified: Name = format!("{}:{}", self.module, symbol).into();
        if self.oracles.stream(&qualified).is_some() {
            return Ok(qualified);
        }
        if self.oracles.stream(symbol).is_some() {
            return Ok(symbol.clone());
        }
        Err(EvalError::MissingOracle(symbol.clone()))
    }
}

impl Driver for ProbeDriver<'_> {
    fn choose(&mut self, candidates: &[Value]) -> Result<usize, EvalError> {
        Ok(self.rng.gen_range(0..candidates.len()))
    }

    fn external(&mut self, symbol: &Name, args: &[Value]) -> Result<Option<Value>, EvalError> {
        if self.mode == ProbeMode::Timed && !self.config.workload.contains(symbol) {
            // Timeline symbol: its value lives in the state.
            return Ok(None);
        }
        let key = (symbol.clone(), args.to_vec());
        if let Some(v) = self.frozen.get(&key) {
            return Ok(Some(v.clone()));
        }
        let value = if self.config.gated.contains(symbol) && self.busy {
            // A busy agent sees its workload trigger as false without
            // consuming the pulse.
            Value::FALSE
        } else {
            let stream_key = self.stream_key(symbol)?;
            let stream = self.oracles.stream_mut(&stream_key).expect("resolved");
            let v = stream.peek();
            if stream.progressing() {
                self.fresh = true;
            }
            self.consumed.push(stream_key);
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

/// Computes the update set of `agent`'s module at the current state, reading
/// externals through the oracles (peek only; commit happens when the move is
/// recorded). Returns the update set plus the readings taken.
pub fn fire_agent(
    state: &State,
    agent: &AgentId,
    config: &RunConfig,
    oracles: &mut OracleTable,
    rng: &mut ChaCha8Rng,
) -> Result<(UpdateSet, Vec<Reading>), EvalError> {
    let module_name = config
        .agents
        .get(agent)
        .ok_or_else(|| EvalError::UnknownSymbol(agent.0.clone()))?
        .clone();
    let module = config.modules[&module_name].clone();
    let probe = probe_agent(
        state,
        agent,
        &module_name,
        &module,
        config,
        oracles,
        rng,
        ProbeMode::Untimed,
    )?;
    Ok((probe.updates, probe.readings))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn probe_agent(
    state: &State,
    agent: &AgentId,
    module_name: &Name,
    module: &Rule,
    config: &RunConfig,
    oracles: &mut OracleTable,
    rng: &mut ChaCha8Rng,
    mode: ProbeMode,
) -> Result<Probe, EvalError> {
    let mut driver = ProbeDriver {
        oracles,
        rng,
        module: module_name,
        mode,
        busy: RunConfig::agent_busy(state, agent),
        config,
        frozen: BTreeMap::new(),
        readings: Vec::new(),
        consumed: Vec::new(),
        fresh: false,
    };
    let ctx = Ctx::with_me(state, agent);
    let updates = compute_update_set(module, &ctx, &mut Env::new(), &mut driver)?;
    Ok(Probe {
        updates,
        readings: driver.readings,
        consumed: driver.consumed,
        fresh: driver.fresh,
    })
}

/// Executes a sequential run: at each step every agent is probed, the
/// scheduler picks one enabled agent, its probe is committed as a move.
/// Stops at quiescence or at the move budget.
pub fn run(config: &RunConfig, seed: u64) -> Result<Trace, RunError> {
    let mut state = config.initial.clone();
    let mut oracles = OracleTable::new(&config.oracles, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moves: Vec<Move> = Vec::new();
    let mut rr_cursor = 0usize;

    let agents: Vec<(AgentId, Name, Rule)> = config
        .agents
        .iter()
        .map(|(a, m)| (a.clone(), m.clone(), config.modules[m].clone()))
        .collect();

    let stop = loop {
        if moves.len() >= config.budget {
            break StopReason::BudgetExhausted;
        }
        let mut enabled: Vec<(usize, Probe)> = Vec::new();
        for (i, (agent, module_name, module)) in agents.iter().enumerate() {
            let probe = probe_agent(
                &state,
                agent,
                module_name,
                module,
                config,
                &mut oracles,
                &mut rng,
                ProbeMode::Untimed,
            )
            .map_err(|source| RunError::Eval {
                agent: agent.clone(),
                source,
            })?;
            if probe.enabled(&state) {
                enabled.push((i, probe));
            }
        }
        if enabled.is_empty() {
            break StopReason::Quiescent;
        }
        let pick = match config.policy {
            SchedulerPolicy::Random => rng.gen_range(0..enabled.len()),
            SchedulerPolicy::RoundRobin | SchedulerPolicy::Prompt => {
                let pos = enabled
                    .iter()
                    .position(|(i, _)| *i >= rr_cursor)
                    .unwrap_or(0);
                rr_cursor = enabled[pos].0 + 1;
                pos
            }
        };
        let (agent_idx, probe) = enabled.swap_remove(pick);
        let agent = agents[agent_idx].0.clone();
        let pre_digest = state.digest();
        state = match fire(&state, &probe.updates) {
            Ok(s) => s,
            Err(FireError::Clash { location, .. }) => {
                let final_digest = state.digest();
                return Err(RunError::Clash {
                    location,
                    trace: Box::new(Trace {
                        config_digest: config.config_digest,
                        seed,
                        policy: config.policy,
                        moves,
                        final_digest,
                        stop: StopReason::Quiescent,
                    }),
                });
            }
            Err(e @ FireError::RelationType { .. }) => {
                return Err(RunError::Fire { agent, source: e })
            }
        };
        for symbol in &probe.consumed {
            if let Some(s) = oracles.stream_mut(symbol) {
                s.commit();
            }
        }
        moves.push(Move {
            index: moves.len(),
            agent,
            updates: probe.updates,
            reads: probe.readings,
            pre_digest,
        });
    };

    Ok(Trace {
        config_digest: config.config_digest,
        seed,
        policy: config.policy,
        moves,
        final_digest: state.digest(),
        stop,
    })
}
