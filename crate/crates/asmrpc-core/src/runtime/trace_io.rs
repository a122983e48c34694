//! Canonical trace files: line-delimited, one move per line, fixed key
//! order, values in canonical text form, no embedded spaces. Identical runs
//! serialize to identical bytes on every platform.
//!
//! ```text
//! asmrpc-trace v1 kind=untimed config=<hex16> seed=7 policy=random stop=quiescent final=<hex16>
//! move index=0 agent=@caller.0 updates=[CallMade(@caller.0):=true,...] reads=[MakeCall=true] pre=<hex16>
//! ```
//!
//! Timed traces add `t=<tick>` to move lines, oracle-event lines
//! `@<tick> <symbol>=<value>`, and `delta`/`epsilon`/`horizon` header fields.

use std::fmt::Write as _;

use super::{Move, Reading, SchedulerPolicy, StopReason, TimedEntry, TimedTrace, Trace};
use crate::state::{Location, Update, UpdateSet};
use crate::value::{Tick, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed trace at line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> TraceParseError {
    TraceParseError {
        line,
        message: message.into(),
    }
}

fn write_move(out: &mut String, mv: &Move, tick: Option<Tick>) {
    write!(out, "move index={} agent={}", mv.index, mv.agent).unwrap();
    if let Some(t) = tick {
        write!(out, " t={t}").unwrap();
    }
    out.push_str(" updates=[");
    for (i, u) in mv.updates.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{}:={}", u.location, u.value).unwrap();
    }
    out.push_str("] reads=[");
    for (i, r) in mv.reads.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let loc = Location {
            symbol: r.symbol.clone(),
            args: r.args.clone(),
        };
        write!(out, "{}={}", loc, r.value).unwrap();
    }
    writeln!(out, "] pre={:016x}", mv.pre_digest).unwrap();
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "asmrpc-trace v1 kind=untimed config={:016x} seed={} policy={} stop={} final={:016x}",
        trace.config_digest,
        trace.seed,
        trace.policy.name(),
        trace.stop.name(),
        trace.final_digest
    )
    .unwrap();
    for mv in &trace.moves {
        write_move(&mut out, mv, None);
    }
    out
}

pub fn write_timed_trace(trace: &TimedTrace) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "asmrpc-trace v1 kind=timed config={:016x} seed={} delta={} epsilon={} horizon={} stop={} final={:016x}",
        trace.config_digest,
        trace.seed,
        trace.delta,
        trace.epsilon,
        trace.horizon,
        trace.stop.name(),
        trace.final_digest
    )
    .unwrap();
    for entry in &trace.entries {
        match entry {
            TimedEntry::Move { tick, mv } => write_move(&mut out, mv, Some(*tick)),
            TimedEntry::OracleEvent {
                tick,
                symbol,
                value,
            } => {
                writeln!(out, "@{tick} {symbol}={value}").unwrap();
            }
        }
    }
    out
}

/// Splits a `[a,b,[c,d]]` list body at top-level commas.
fn split_top_level(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < body.len() {
        parts.push(&body[start..]);
    }
    parts
}

fn parse_location(text: &str, line: usize) -> Result<Location, TraceParseError> {
    match text.split_once('(') {
        None => Ok(Location::nullary(text)),
        Some((symbol, rest)) => {
            let body = rest
                .strip_suffix(')')
                .ok_or_else(|| err(line, format!("unterminated location `{text}`")))?;
            let mut args = Vec::new();
            for part in split_top_level(body) {
                args.push(
                    Value::parse(part).map_err(|e| err(line, format!("bad value: {e}")))?,
                );
            }
            Ok(Location::new(symbol, args))
        }
    }
}

fn parse_fields(line_text: &str) -> Vec<(&str, &str)> {
    line_text
        .split(' ')
        .filter_map(|tok| tok.split_once('='))
        .collect()
}

fn field<'a>(
    fields: &[(&'a str, &'a str)],
    key: &str,
    line: usize,
) -> Result<&'a str, TraceParseError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| err(line, format!("missing field `{key}`")))
}

fn parse_hex16(s: &str, line: usize) -> Result<u64, TraceParseError> {
    u64::from_str_radix(s, 16).map_err(|_| err(line, format!("bad digest `{s}`")))
}

fn parse_move_line(text: &str, line: usize) -> Result<(Move, Option<Tick>), TraceParseError> {
    let fields = parse_fields(text);
    let index: usize = field(&fields, "index", line)?
        .parse()
        .map_err(|_| err(line, "bad index"))?;
    let agent_text = field(&fields, "agent", line)?;
    let agent = match Value::parse(agent_text) {
        Ok(Value::Agent(a)) => a,
        _ => return Err(err(line, format!("bad agent `{agent_text}`"))),
    };
    let tick = match fields.iter().find(|(k, _)| *k == "t") {
        Some((_, v)) => Some(v.parse::<Tick>().map_err(|_| err(line, "bad tick"))?),
        None => None,
    };
    let updates_body = field(&fields, "updates", line)?;
    let updates_body = updates_body
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(line, "bad updates list"))?;
    let mut updates = Vec::new();
    for part in split_top_level(updates_body) {
        let (loc, val) = part
            .split_once(":=")
            .ok_or_else(|| err(line, format!("bad update `{part}`")))?;
        updates.push(Update {
            location: parse_location(loc, line)?,
            value: Value::parse(val).map_err(|e| err(line, format!("bad value: {e}")))?,
        });
    }
    let reads_body = field(&fields, "reads", line)?;
    let reads_body = reads_body
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(line, "bad reads list"))?;
    let mut reads = Vec::new();
    for part in split_top_level(reads_body) {
        let (loc, val) = part
            .split_once('=')
            .ok_or_else(|| err(line, format!("bad reading `{part}`")))?;
        let loc = parse_location(loc, line)?;
        reads.push(Reading {
            symbol: loc.symbol,
            args: loc.args,
            value: Value::parse(val).map_err(|e| err(line, format!("bad value: {e}")))?,
        });
    }
    let pre_digest = parse_hex16(field(&fields, "pre", line)?, line)?;
    Ok((
        Move {
            index,
            agent,
            updates: UpdateSet::from_updates(updates),
            reads,
            pre_digest,
        },
        tick,
    ))
}

fn parse_stop(s: &str, line: usize) -> Result<StopReason, TraceParseError> {
    match s {
        "quiescent" => Ok(StopReason::Quiescent),
        "budget" => Ok(StopReason::BudgetExhausted),
        "horizon" => Ok(StopReason::HorizonReached),
        _ => Err(err(line, format!("bad stop reason `{s}`"))),
    }
}

/// A parsed trace file of either kind.
#[derive(Debug, Clone)]
pub enum TraceFile {
    Untimed(Trace),
    Timed(TimedTrace),
}

pub fn parse_trace_file(text: &str) -> Result<TraceFile, TraceParseError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty trace file"))?;
    if !header.starts_with("asmrpc-trace v1 ") {
        return Err(err(1, "not an asmrpc trace file"));
    }
    let fields = parse_fields(header);
    let kind = field(&fields, "kind", 1)?;
    let config_digest = parse_hex16(field(&fields, "config", 1)?, 1)?;
    let seed: u64 = field(&fields, "seed", 1)?
        .parse()
        .map_err(|_| err(1, "bad seed"))?;
    let stop = parse_stop(field(&fields, "stop", 1)?, 1)?;
    let final_digest = parse_hex16(field(&fields, "final", 1)?, 1)?;

    match kind {
        "untimed" => {
            let policy = SchedulerPolicy::parse(field(&fields, "policy", 1)?)
                .ok_or_else(|| err(1, "bad policy"))?;
            let mut moves = Vec::new();
            for (i, text) in lines {
                let line = i + 1;
                if text.is_empty() {
                    continue;
                }
                if let Some(rest) = text.strip_prefix("move ") {
                    let (mv, tick) = parse_move_line(rest, line)?;
                    if tick.is_some() {
                        return Err(err(line, "tick on an untimed move"));
                    }
                    moves.push(mv);
                } else {
                    return Err(err(line, format!("unexpected line `{text}`")));
                }
            }
            Ok(TraceFile::Untimed(Trace {
                config_digest,
                seed,
                policy,
                moves,
                final_digest,
                stop,
            }))
        }
        "timed" => {
            let delta: Tick = field(&fields, "delta", 1)?
                .parse()
                .map_err(|_| err(1, "bad delta"))?;
            let epsilon: Tick = field(&fields, "epsilon", 1)?
                .parse()
                .map_err(|_| err(1, "bad epsilon"))?;
            let horizon: Tick = field(&fields, "horizon", 1)?
                .parse()
                .map_err(|_| err(1, "bad horizon"))?;
            let mut entries = Vec::new();
            for (i, text) in lines {
                let line = i + 1;
                if text.is_empty() {
                    continue;
                }
                if let Some(rest) = text.strip_prefix("move ") {
                    let (mv, tick) = parse_move_line(rest, line)?;
                    let tick = tick.ok_or_else(|| err(line, "move without tick"))?;
                    entries.push(TimedEntry::Move { tick, mv });
                } else if let Some(rest) = text.strip_prefix('@') {
                    let (tick_text, assign) = rest
                        .split_once(' ')
                        .ok_or_else(|| err(line, "bad oracle event"))?;
                    let tick: Tick = tick_text.parse().map_err(|_| err(line, "bad tick"))?;
                    let (symbol, value) = assign
                        .split_once('=')
                        .ok_or_else(|| err(line, "bad oracle event"))?;
                    entries.push(TimedEntry::OracleEvent {
                        tick,
                        symbol: symbol.into(),
                        value: Value::parse(value)
                            .map_err(|e| err(line, format!("bad value: {e}")))?,
                    });
                } else {
                    return Err(err(line, format!("unexpected line `{text}`")));
                }
            }
            Ok(TraceFile::Timed(TimedTrace {
                config_digest,
                seed,
                delta,
                epsilon,
                horizon,
                entries,
                final_digest,
                stop,
            }))
        }
        other => Err(err(1, format!("unknown trace kind `{other}`"))),
    }
}
