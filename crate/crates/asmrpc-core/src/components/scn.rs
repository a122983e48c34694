//! Scenario files: flat `key = value` text, `#` comments. Canonicalized on
//! load; the digest of the canonical text is recorded in traces.

use super::{ScenarioKind, ScenarioSpec};
use crate::runtime::{Fairness, OracleSpec, SchedulerPolicy};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scenario error at line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError {
        line,
        message: message.into(),
    }
}

/// Splits at top-level commas (bracket-aware, so list values survive).
fn split_commas(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in body.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(body[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = body[start..].trim();
    if !last.is_empty() {
        parts.push(last);
    }
    parts
}

fn parse_value(text: &str, line: usize) -> Result<Value, ScenarioError> {
    Value::parse(text).map_err(|e| err(line, format!("bad value `{text}`: {e}")))
}

/// Oracle grammar: `constant(v)`, `scripted(v, v, ...)`, `pulses(n)`,
/// `random(v:w, v:w | fair v window)`.
fn parse_oracle(text: &str, line: usize) -> Result<OracleSpec, ScenarioError> {
    let text = text.trim();
    let (head, rest) = text
        .split_once('(')
        .ok_or_else(|| err(line, format!("bad oracle spec `{text}`")))?;
    let body = rest
        .strip_suffix(')')
        .ok_or_else(|| err(line, format!("unterminated oracle spec `{text}`")))?;
    match head.trim() {
        "constant" => Ok(OracleSpec::Constant(parse_value(body.trim(), line)?)),
        "pulses" => {
            let n: usize = body
                .trim()
                .parse()
                .map_err(|_| err(line, format!("bad pulse count `{body}`")))?;
            Ok(OracleSpec::pulses(n))
        }
        "scripted" => {
            let mut values = Vec::new();
            for part in split_commas(body) {
                values.push(parse_value(part, line)?);
            }
            if values.is_empty() {
                return Err(err(line, "scripted oracle needs at least one value"));
            }
            Ok(OracleSpec::Scripted(values))
        }
        "random" => {
            let (choices_text, fair_text) = match body.split_once('|') {
                Some((c, f)) => (c, Some(f)),
                None => (body, None),
            };
            let mut choices = Vec::new();
            for part in split_commas(choices_text) {
                let (v, w) = part
                    .rsplit_once(':')
                    .ok_or_else(|| err(line, format!("bad weighted value `{part}`")))?;
                let weight: u32 = w
                    .trim()
                    .parse()
                    .map_err(|_| err(line, format!("bad weight `{w}`")))?;
                choices.push((parse_value(v.trim(), line)?, weight));
            }
            if choices.is_empty() {
                return Err(err(line, "random oracle needs at least one choice"));
            }
            let fair = match fair_text {
                None => None,
                Some(f) => {
                    let parts: Vec<&str> = f.split_whitespace().collect();
                    match parts.as_slice() {
                        ["fair", value, window] => Some(Fairness {
                            value: parse_value(value, line)?,
                            window: window
                                .parse()
                                .map_err(|_| err(line, format!("bad window `{window}`")))?,
                        }),
                        _ => return Err(err(line, format!("bad fairness clause `{f}`"))),
                    }
                }
            };
            Ok(OracleSpec::Random { choices, fair })
        }
        other => Err(err(line, format!("unknown oracle kind `{other}`"))),
    }
}

fn render_oracle(spec: &OracleSpec) -> String {
    match spec {
        OracleSpec::Constant(v) => format!("constant({v})"),
        OracleSpec::Scripted(vs) => format!(
            "scripted({})",
            vs.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        OracleSpec::Random { choices, fair } => {
            let body = choices
                .iter()
                .map(|(v, w)| format!("{v}:{w}"))
                .collect::<Vec<_>>()
                .join(", ");
            match fair {
                None => format!("random({body})"),
                Some(f) => format!("random({body} | fair {} {})", f.value, f.window),
            }
        }
    }
}

fn parse_range(text: &str, line: usize) -> Result<(u64, u64), ScenarioError> {
    match text.split_once("..") {
        Some((lo, hi)) => {
            let lo = lo.trim().parse().map_err(|_| err(line, "bad delay"))?;
            let hi = hi.trim().parse().map_err(|_| err(line, "bad delay"))?;
            if lo > hi {
                return Err(err(line, format!("empty delay range `{text}`")));
            }
            Ok((lo, hi))
        }
        None => {
            let v = text.trim().parse().map_err(|_| err(line, "bad delay"))?;
            Ok((v, v))
        }
    }
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let mut spec = ScenarioSpec::default();
    let mut saw_kind = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "kind" => {
                spec.kind = ScenarioKind::parse(value)
                    .ok_or_else(|| err(line, format!("unknown scenario kind `{value}`")))?;
                saw_kind = true;
            }
            "memlocs" => {
                spec.mem_locs = split_commas(value).into_iter().map(Into::into).collect()
            }
            "memvals" => {
                spec.mem_vals = split_commas(value).into_iter().map(Into::into).collect()
            }
            "initval" => spec.init_val = value.into(),
            "budget" => {
                spec.budget = value.parse().map_err(|_| err(line, "bad budget"))?;
            }
            "policy" => {
                spec.policy = SchedulerPolicy::parse(value)
                    .ok_or_else(|| err(line, format!("unknown policy `{value}`")))?;
            }
            "delta" => spec.delta = value.parse().map_err(|_| err(line, "bad delta"))?,
            "epsilon" => spec.epsilon = value.parse().map_err(|_| err(line, "bad epsilon"))?,
            "horizon" => spec.horizon = value.parse().map_err(|_| err(line, "bad horizon"))?,
            // Inline program text; `\n` escapes stand for newlines.
            "program" => spec.program_text = Some(value.replace("\\n", "\n")),
            _ => {
                if let Some(module) = key.strip_prefix("component.") {
                    let pool: usize = value.parse().map_err(|_| err(line, "bad pool size"))?;
                    spec.components.insert(module.into(), pool);
                } else if let Some(constant) = key.strip_prefix("wire.") {
                    spec.wiring.insert(constant.into(), value.into());
                } else if let Some(proc) = key.strip_prefix("argnum.") {
                    let n: i64 = value.parse().map_err(|_| err(line, "bad argnum"))?;
                    spec.arg_num.insert(proc.into(), n);
                } else if let Some(symbol) = key.strip_prefix("oracle.") {
                    // `oracle.Fail` or `oracle.<module>.Fail`.
                    let name = match symbol.split_once('.') {
                        Some((module, sym)) => format!("{module}:{sym}"),
                        None => symbol.to_string(),
                    };
                    spec.oracles
                        .insert(name.as_str().into(), parse_oracle(value, line)?);
                } else if let Some(module) = key.strip_prefix("delay.") {
                    spec.delays.insert(module.into(), parse_range(value, line)?);
                } else {
                    return Err(err(line, format!("unknown key `{key}`")));
                }
            }
        }
    }
    if !saw_kind {
        return Err(err(1, "missing `kind`"));
    }
    // Timed scenarios always carry the recycler module.
    if spec.kind.is_timed() && !spec.components.contains_key("recycler") {
        spec.components.insert("recycler".into(), 1);
    }
    Ok(spec)
}

/// Canonical rendering: one sorted `key = value` line per entry. Parsing the
/// output reproduces the spec.
pub fn render_canonical(spec: &ScenarioSpec) -> String {
    let mut lines: Vec<String> = Vec::new();
    lines.push(format!("kind = {}", spec.kind.name()));
    for (m, n) in &spec.components {
        lines.push(format!("component.{m} = {n}"));
    }
    for (c, t) in &spec.wiring {
        lines.push(format!("wire.{c} = {t}"));
    }
    if !spec.mem_locs.is_empty() {
        lines.push(format!(
            "memlocs = {}",
            spec.mem_locs
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    if !spec.mem_vals.is_empty() {
        lines.push(format!(
            "memvals = {}",
            spec.mem_vals
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    lines.push(format!("initval = {}", spec.init_val));
    for (p, n) in &spec.arg_num {
        lines.push(format!("argnum.{p} = {n}"));
    }
    for (sym, oracle) in &spec.oracles {
        let key = match sym.split_once(':') {
            Some((module, s)) => format!("oracle.{module}.{s}"),
            None => format!("oracle.{sym}"),
        };
        lines.push(format!("{key} = {}", render_oracle(oracle)));
    }
    lines.push(format!("budget = {}", spec.budget));
    lines.push(format!("policy = {}", spec.policy.name()));
    if spec.kind.is_timed() {
        lines.push(format!("delta = {}", spec.delta));
        lines.push(format!("epsilon = {}", spec.epsilon));
        lines.push(format!("horizon = {}", spec.horizon));
        for (m, (lo, hi)) in &spec.delays {
            lines.push(format!("delay.{m} = {lo}..{hi}"));
        }
    }
    if let Some(p) = &spec.program_text {
        lines.push(format!("program = {}", p.replace('\n', "\\n")));
    }
    lines.sort();
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

pub const PROBLEM1_SCN: &str = include_str!("../../scenarios/problem1.scn");
pub const PROBLEM2_SCN: &str = include_str!("../../scenarios/problem2.scn");
pub const PROBLEM3_SCN: &str = include_str!("../../scenarios/problem3.scn");
pub const PROBLEM4_SCN: &str = include_str!("../../scenarios/problem4.scn");
pub const PROBLEM5_SCN: &str = include_str!("../../scenarios/problem5.scn");
pub const ENUM_TINY_SCN: &str = include_str!("../../scenarios/enum_tiny.scn");

/// The bundled scenarios, addressable by name from the CLI.
pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    Some(match name {
        "problem1" => PROBLEM1_SCN,
        "problem2" => PROBLEM2_SCN,
        "problem3" => PROBLEM3_SCN,
        "problem4" => PROBLEM4_SCN,
        "problem5" => PROBLEM5_SCN,
        "enum-tiny" => ENUM_TINY_SCN,
        _ => return None,
    })
}

pub fn builtin_scenario_names() -> &'static [&'static str] {
    &[
        "problem1", "problem2", "problem3", "problem4", "problem5", "enum-tiny",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scenarios_parse_and_canonicalize_stably() {
        for name in builtin_scenario_names() {
            let text = builtin_scenario(name).unwrap();
            let spec = parse_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let canon = render_canonical(&spec);
            let spec2 = parse_scenario(&canon).unwrap();
            assert_eq!(spec, spec2, "{name} not canonical-stable");
            assert_eq!(render_canonical(&spec2), canon);
        }
    }

    #[test]
    fn oracle_specs_round_trip() {
        for text in [
            "constant(false)",
            "pulses(3)",
            "scripted(true, false, [l1,v1])",
            "random(true:1, false:3)",
            "random(read:4, write:4, [l1,v2]:1 | fair true 5)",
        ] {
            let spec = parse_oracle(text, 1).unwrap();
            let rendered = render_oracle(&spec);
            let spec2 = parse_oracle(&rendered, 1).unwrap();
            assert_eq!(spec, spec2, "{text}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_scenario("kind = memory\nbogus = 1\n").is_err());
        assert!(parse_scenario("component.caller = 2\n").is_err());
    }
}
