//! Event-driven timed simulator.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{deadline_sensitivities, DeadlineSensitivity, TimedConfig};
use crate::eval::EvalError;
use crate::runtime::run::{probe_agent, ProbeMode};
use crate::runtime::{
    Move, OracleSpec, OracleTable, StopReason, TimedEntry, TimedTrace,
};
use crate::state::{fire, Location};
use crate::value::{AgentId, Name, Tick, Value};

#[derive(Debug, thiserror::Error)]
pub enum TimedError {
    #[error("clash at {location} (tick {tick})")]
    Clash { location: Location, tick: Tick },
    #[error("evaluation failed for agent {agent}: {source}")]
    Eval {
        agent: AgentId,
        #[source]
        source: EvalError,
    },
    #[error("agents kept firing at tick {tick}; runaway rule suspected")]
    RunawayTick { tick: Tick },
}

/// Scheduled changes of timeline-backed external functions over the horizon.
fn timeline_events(config: &TimedConfig, seed: u64) -> Vec<(Tick, Name, Value)> {
    let mut events = Vec::new();
    for (symbol, spec) in &config.base.oracles {
        if config.base.workload.contains(symbol) {
            continue;
        }
        // Qualified instances live in the state under their plain name only
        // when unambiguous; shipped timed scenarios use constants, which
        // need no events. Scripted/Random timelines get change points.
        let plain: Name = match symbol.rsplit_once(':') {
            Some((_, s)) => s.into(),
            None => symbol.clone(),
        };
        match spec {
            OracleSpec::Constant(_) => {}
            OracleSpec::Scripted(vs) => {
                for (i, v) in vs.iter().enumerate().skip(1) {
                    events.push((i as Tick, plain.clone(), v.clone()));
                }
            }
            OracleSpec::Random { choices, fair } => {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ crate::state::Fnv64::digest(symbol.as_bytes()),
                );
                let window = fair.as_ref().map(|f| f.window as Tick).unwrap_or(8);
                let total: u32 = choices.iter().map(|(_, w)| w).sum();
                let mut t: Tick = 0;
                let mut run = 0u32;
                while t < config.horizon {
                    t += rng.gen_range(1..=window.max(1));
                    let forced = fair
                        .as_ref()
                        .filter(|f| run + 1 >= f.window)
                        .map(|f| f.value.clone());
                    let v = forced.unwrap_or_else(|| {
                        let mut pick = rng.gen_range(0..total.max(1));
                        for (v, w) in choices {
                            if pick < *w {
                                return v.clone();
                            }
                            pick -= w;
                        }
                        Value::Undef
                    });
                    let is_fair = fair.as_ref().is_some_and(|f| v == f.value);
                    run = if is_fair { 0 } else { run + 1 };
                    events.push((t, plain.clone(), v));
                }
            }
        }
    }
    events.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    events
}

/// Runs the timed simulation to quiescence, the horizon, or the move budget.
pub fn simulate_timed(config: &TimedConfig, seed: u64) -> Result<TimedTrace, TimedError> {
    let base = &config.base;
    let mut state = base.initial.clone();
    let mut oracles = OracleTable::new(&base.oracles, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries: Vec<TimedEntry> = Vec::new();

    let sensitivities: BTreeMap<Name, Vec<DeadlineSensitivity>> = base
        .modules
        .iter()
        .map(|(name, rule)| (name.clone(), deadline_sensitivities(rule, &base.initial)))
        .collect();

    let events = timeline_events(config, seed);
    let mut next_event = 0usize;

    let mut wakes: BTreeMap<AgentId, Tick> = BTreeMap::new();
    let mut ct: Tick = 0;
    let mut move_index = 0usize;

    let prompt = base.policy == crate::runtime::SchedulerPolicy::Prompt;
    let draw_delay = |module: &Name, rng: &mut ChaCha8Rng| -> Tick {
        if prompt {
            return 0;
        }
        match config.delays.get(module) {
            Some((lo, hi)) if hi > lo => rng.gen_range(*lo..=*hi),
            Some((lo, _)) => *lo,
            None => 0,
        }
    };

    macro_rules! refresh_wakes {
        ($state:expr, $ct:expr) => {
            for (agent, module_name) in &base.agents {
                let module = &base.modules[module_name];
                let probe = probe_agent(
                    $state,
                    agent,
                    module_name,
                    module,
                    base,
                    &mut oracles,
                    &mut rng,
                    ProbeMode::Timed,
                )
                .map_err(|source| TimedError::Eval {
                    agent: agent.clone(),
                    source,
                })?;
                if probe.enabled($state) {
                    if !wakes.contains_key(agent) {
                        let d = draw_delay(module_name, &mut rng);
                        wakes.insert(agent.clone(), $ct + d);
                    }
                } else {
                    wakes.remove(agent);
                }
            }
        };
    }

    let stop = 'sim: loop {
        // Activity happens at ticks strictly below the horizon; a zero
        // horizon leaves the initial state untouched.
        if ct >= config.horizon {
            break StopReason::HorizonReached;
        }
        // External changes scheduled at this tick happen first.
        while next_event < events.len() && events[next_event].0 == ct {
            let (tick, symbol, value) = events[next_event].clone();
            state.set(Location::nullary(&symbol), value.clone());
            entries.push(TimedEntry::OracleEvent {
                tick,
                symbol,
                value,
            });
            next_event += 1;
        }
        state.set(Location::nullary("CT"), Value::Tick(ct));
        refresh_wakes!(&state, ct);

        // Fire every due agent, one move at a time, until the tick settles.
        let mut fired_this_tick = 0usize;
        loop {
            let due: Option<AgentId> = wakes
                .iter()
                .filter(|(_, wake)| **wake <= ct)
                .map(|(a, wake)| (*wake, a.clone()))
                .min()
                .map(|(_, a)| a);
            let Some(agent) = due else { break };
            wakes.remove(&agent);
            let module_name = base.agents[&agent].clone();
            let module = base.modules[&module_name].clone();
            let probe = probe_agent(
                &state,
                &agent,
                &module_name,
                &module,
                base,
                &mut oracles,
                &mut rng,
                ProbeMode::Timed,
            )
            .map_err(|source| TimedError::Eval {
                agent: agent.clone(),
                source,
            })?;
            if !probe.enabled(&state) {
                continue;
            }
            fired_this_tick += 1;
            if fired_this_tick > 64 * base.agents.len().max(1) {
                return Err(TimedError::RunawayTick { tick: ct });
            }
            let pre_digest = state.digest();
            state = fire(&state, &probe.updates).map_err(|e| match e {
                crate::state::FireError::Clash { location, .. } => TimedError::Clash {
                    location,
                    tick: ct,
                },
                crate::state::FireError::RelationType { location, .. } => TimedError::Clash {
                    location,
                    tick: ct,
                },
            })?;
            for symbol in &probe.consumed {
                if let Some(s) = oracles.stream_mut(symbol) {
                    s.commit();
                }
            }
            entries.push(TimedEntry::Move {
                tick: ct,
                mv: Move {
                    index: move_index,
                    agent,
                    updates: probe.updates,
                    reads: probe.readings,
                    pre_digest,
                },
            });
            move_index += 1;
            if move_index >= base.budget {
                break 'sim StopReason::BudgetExhausted;
            }
            refresh_wakes!(&state, ct);
        }

        // Advance the clock to the next thing that can happen.
        let mut next: Option<Tick> = None;
        let mut consider = |t: Tick| {
            if t > ct {
                next = Some(next.map_or(t, |n: Tick| n.min(t)));
            }
        };
        if next_event < events.len() {
            consider(events[next_event].0);
        }
        for wake in wakes.values() {
            consider(*wake);
        }
        for (agent, module_name) in &base.agents {
            for s in &sensitivities[module_name] {
                let held = state.read(&Location::new(
                    &s.time_fn,
                    [Value::Agent(agent.clone())],
                ));
                if let Value::Tick(t0) = held {
                    consider(t0 + s.offset);
                }
            }
        }
        match next {
            None => break StopReason::Quiescent,
            Some(t) if t >= config.horizon => break StopReason::HorizonReached,
            Some(t) => ct = t,
        }
    };

    // The final digest is taken modulo the clock: the checker can only
    // reconstruct state up to the last change point.
    state.set(Location::nullary("CT"), Value::Undef);
    Ok(TimedTrace {
        config_digest: base.config_digest,
        seed,
        delta: config.delta,
        epsilon: config.epsilon,
        horizon: config.horizon,
        entries,
        final_digest: state.digest(),
        stop,
    })
}
