//! Elements of the superuniverse.
//!
//! Every value a machine can store or a rule can compute is a [`Value`].
//! Equality is total, and the derived `Ord` gives the canonical ordering
//! used for candidate enumeration and trace serialization.

use std::fmt;
use std::sync::Arc;

/// Interned-ish name type shared by symbols, agents and constants.
pub type Name = Arc<str>;

/// An agent identifier, e.g. `memory.0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub Name);

impl AgentId {
    pub fn new(name: &str) -> Self {
        AgentId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

/// A tick count on the discrete global clock.
pub type Tick = u64;

/// A member of the superuniverse.
///
/// The variant order fixes the canonical total order over values.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Undef,
    Int(i64),
    Tick(Tick),
    /// A symbolic constant such as `read`, `BadArg` or a module name.
    Sym(Name),
    /// An argument list.
    List(Vec<Value>),
    Agent(AgentId),
}

impl Value {
    pub const TRUE: Value = Value::Bool(true);
    pub const FALSE: Value = Value::Bool(false);

    pub fn sym(name: &str) -> Value {
        Value::Sym(Arc::from(name))
    }

    pub fn agent(name: &str) -> Value {
        Value::Agent(AgentId::new(name))
    }

    pub fn list(items: impl Into<Vec<Value>>) -> Value {
        Value::List(items.into())
    }

    /// Strict truth: everything that is not `true` counts as not-true.
    pub fn is_true(&self) -> bool {
        matches!(self, Value::Bool(true))
    }

    pub fn is_undef(&self) -> bool {
        matches!(self, Value::Undef)
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Value::Bool(_))
    }

    /// Canonical text form; parseable back via [`Value::parse`].
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Parses the canonical text form produced by `Display`.
    pub fn parse(text: &str) -> Result<Value, ValueParseError> {
        let (v, rest) = parse_value(text.trim())?;
        if !rest.is_empty() {
            return Err(ValueParseError::trailing(rest));
        }
        Ok(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => write!(f, "true"),
            Value::Bool(false) => write!(f, "false"),
            Value::Undef => write!(f, "undef"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Tick(t) => write!(f, "#{t}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Agent(a) => write!(f, "{a}"),
            Value::List(items) => {
                write!(f, "[")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad value syntax at `{at}`")]
pub struct ValueParseError {
    pub at: String,
}

impl ValueParseError {
    fn trailing(rest: &str) -> Self {
        ValueParseError {
            at: rest.chars().take(24).collect(),
        }
    }
}

fn ident_len(s: &str) -> usize {
    s.char_indices()
        .take_while(|(i, c)| c.is_ascii_alphanumeric() || *c == '_' || (*i > 0 && *c == '.'))
        .count()
}

/// Parses one value off the front of `text`, returning the remainder.
fn parse_value(text: &str) -> Result<(Value, &str), ValueParseError> {
    let err = || ValueParseError::trailing(text);
    let mut chars = text.chars();
    match chars.next() {
        None => Err(err()),
        Some('[') => {
            let mut rest = &text[1..];
            let mut items = Vec::new();
            loop {
                rest = rest.trim_start();
                if let Some(r) = rest.strip_prefix(']') {
                    return Ok((Value::List(items), r));
                }
                if !items.is_empty() {
                    rest = rest.strip_prefix(',').ok_or_else(err)?.trim_start();
                }
                let (v, r) = parse_value(rest)?;
                items.push(v);
                rest = r;
            }
        }
        Some('@') => {
            let rest = &text[1..];
            let n = ident_len(rest);
            if n == 0 {
                return Err(err());
            }
            Ok((Value::agent(&rest[..n]), &rest[n..]))
        }
        Some('#') => {
            let rest = &text[1..];
            let n = rest.chars().take_while(|c| c.is_ascii_digit()).count();
            if n == 0 {
                return Err(err());
            }
            let t: Tick = rest[..n].parse().map_err(|_| err())?;
            Ok((Value::Tick(t), &rest[n..]))
        }
        Some(c) if c == '-' || c.is_ascii_digit() => {
            let start = usize::from(c == '-');
            let n = start
                + text[start..]
                    .chars()
                    .take_while(|c| c.is_ascii_digit())
                    .count();
            if n == start {
                return Err(err());
            }
            let i: i64 = text[..n].parse().map_err(|_| err())?;
            Ok((Value::Int(i), &text[n..]))
        }
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {
            let n = ident_len(text);
            let word = &text[..n];
            let v = match word {
                "true" => Value::TRUE,
                "false" => Value::FALSE,
                "undef" => Value::Undef,
                _ => Value::sym(word),
            };
            Ok((v, &text[n..]))
        }
        _ => Err(err()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logic_constants_distinct() {
        assert_ne!(Value::TRUE, Value::FALSE);
        assert_ne!(Value::TRUE, Value::Undef);
        assert_ne!(Value::FALSE, Value::Undef);
    }

    #[test]
    fn canonical_round_trip() {
        let samples = [
            Value::TRUE,
            Value::FALSE,
            Value::Undef,
            Value::Int(-42),
            Value::Tick(17),
            Value::sym("BadArg"),
            Value::agent("memory.1"),
            Value::list([Value::sym("l1"), Value::list([Value::Int(3)])]),
            Value::List(vec![]),
        ];
        for v in samples {
            assert_eq!(Value::parse(&v.canonical()).unwrap(), v);
        }
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(Value::parse("true true").is_err());
        assert!(Value::parse("[a,").is_err());
        assert!(Value::parse("@").is_err());
    }
}
