//! States, locations and updates.
//!
//! A state is a vocabulary plus a finite interpretation table. Locations
//! absent from the table read as `undef` (or `false` for relation symbols,
//! which must be Boolean everywhere). Firing an update set produces a new
//! state; states are immutable once built.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::value::{AgentId, Name, Value};

/// A function name with its arity and tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSymbol {
    pub name: Name,
    pub arity: usize,
    pub is_relation: bool,
    pub is_external: bool,
}

impl FunctionSymbol {
    pub fn func(name: &str, arity: usize) -> Self {
        FunctionSymbol {
            name: Arc::from(name),
            arity,
            is_relation: false,
            is_external: false,
        }
    }

    pub fn relation(name: &str, arity: usize) -> Self {
        FunctionSymbol {
            name: Arc::from(name),
            arity,
            is_relation: true,
            is_external: false,
        }
    }

    pub fn external(name: &str, arity: usize) -> Self {
        FunctionSymbol {
            name: Arc::from(name),
            arity,
            is_relation: false,
            is_external: true,
        }
    }
}

/// Built-in symbols that every vocabulary carries: the logic constants,
/// Boolean connectives, comparisons, arithmetic, and the list accessors.
/// These are evaluated structurally and never stored in a state.
pub const BUILTIN_SYMBOLS: &[(&str, usize)] = &[
    ("true", 0),
    ("false", 0),
    ("undef", 0),
    ("Bool", 1),
    ("=", 2),
    ("!=", 2),
    ("and", 2),
    ("or", 2),
    ("not", 1),
    ("+", 2),
    ("*", 2),
    (">=", 2),
    ("<=", 2),
    (">", 2),
    ("<", 2),
    ("First", 1),
    ("Second", 1),
    ("Length", 1),
    ("Pair", 2),
];

pub fn is_builtin(name: &str) -> bool {
    BUILTIN_SYMBOLS.iter().any(|(n, _)| *n == name)
}

pub fn builtin_arity(name: &str) -> Option<usize> {
    BUILTIN_SYMBOLS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

/// A finite collection of function names with unique names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: BTreeMap<Name, FunctionSymbol>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    pub fn declare(&mut self, sym: FunctionSymbol) {
        self.symbols.insert(sym.name.clone(), sym);
    }

    pub fn with(mut self, sym: FunctionSymbol) -> Self {
        self.declare(sym);
        self
    }

    /// Looks a symbol up, falling through to the built-in table.
    pub fn lookup(&self, name: &str) -> Option<FunctionSymbol> {
        if let Some(s) = self.symbols.get(name) {
            return Some(s.clone());
        }
        builtin_arity(name).map(|a| FunctionSymbol {
            name: Arc::from(name),
            arity: a,
            is_relation: name == "Bool",
            is_external: false,
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name) || is_builtin(name)
    }

    pub fn declared(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.symbols.values()
    }

    pub fn merge(&mut self, other: &Vocabulary) {
        for sym in other.symbols.values() {
            self.symbols.insert(sym.name.clone(), sym.clone());
        }
    }
}

/// A location: a function name paired with an argument tuple.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub symbol: Name,
    pub args: Vec<Value>,
}

impl Location {
    pub fn new(symbol: &str, args: impl Into<Vec<Value>>) -> Self {
        Location {
            symbol: Arc::from(symbol),
            args: args.into(),
        }
    }

    pub fn nullary(symbol: &str) -> Self {
        Location::new(symbol, [])
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A single update: put `value` into `location`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Update {
    pub location: Location,
    pub value: Value,
}

impl fmt::Debug for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:={}", self.location, self.value)
    }
}

/// A finite set of updates, kept sorted with exact duplicates removed.
/// Two updates to the same location with different values are retained
/// so that `fire` can report the clash.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct UpdateSet {
    updates: Vec<Update>,
}

impl UpdateSet {
    pub fn new() -> Self {
        UpdateSet::default()
    }

    pub fn singleton(location: Location, value: Value) -> Self {
        UpdateSet {
            updates: vec![Update { location, value }],
        }
    }

    pub fn from_updates(mut updates: Vec<Update>) -> Self {
        updates.sort();
        updates.dedup();
        UpdateSet { updates }
    }

    pub fn insert(&mut self, location: Location, value: Value) {
        let u = Update { location, value };
        if let Err(pos) = self.updates.binary_search(&u) {
            self.updates.insert(pos, u);
        }
    }

    /// Union of two update sets.
    pub fn extend(&mut self, other: UpdateSet) {
        for u in other.updates {
            if let Err(pos) = self.updates.binary_search(&u) {
                self.updates.insert(pos, u);
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Update> {
        self.updates.iter()
    }

    pub fn get(&self, location: &Location) -> Option<&Value> {
        self.updates
            .iter()
            .find(|u| &u.location == location)
            .map(|u| &u.value)
    }

    /// Returns the first clashing location, if any: two updates sharing a
    /// location with different values.
    pub fn find_clash(&self) -> Option<(&Location, &Value, &Value)> {
        for pair in self.updates.windows(2) {
            if pair[0].location == pair[1].location && pair[0].value != pair[1].value {
                return Some((&pair[0].location, &pair[0].value, &pair[1].value));
            }
        }
        None
    }

    pub fn is_consistent(&self) -> bool {
        self.find_clash().is_none()
    }
}

impl fmt::Debug for UpdateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.updates.iter()).finish()
    }
}

impl FromIterator<(Location, Value)> for UpdateSet {
    fn from_iter<T: IntoIterator<Item = (Location, Value)>>(iter: T) -> Self {
        UpdateSet::from_updates(
            iter.into_iter()
                .map(|(location, value)| Update { location, value })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FireError {
    #[error("clash at {location}: {first} vs {second}")]
    Clash {
        location: Location,
        first: Value,
        second: Value,
    },
    #[error("relation {location} assigned non-Boolean value {value}")]
    RelationType { location: Location, value: Value },
}

/// A state: vocabulary plus interpretation table.
#[derive(Clone, PartialEq, Eq)]
pub struct State {
    vocab: Arc<Vocabulary>,
    interp: BTreeMap<Location, Value>,
}

impl State {
    pub fn new(vocab: Arc<Vocabulary>) -> Self {
        State {
            vocab,
            interp: BTreeMap::new(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_arc(&self) -> Arc<Vocabulary> {
        self.vocab.clone()
    }

    /// Sets a location directly (initial-state construction only; runtime
    /// changes go through [`fire`]).
    pub fn set(&mut self, location: Location, value: Value) {
        if value == Value::Undef && !self.is_relation(&location.symbol) {
            self.interp.remove(&location);
        } else {
            self.interp.insert(location, value);
        }
    }

    fn is_relation(&self, symbol: &str) -> bool {
        self.vocab
            .lookup(symbol)
            .map(|s| s.is_relation)
            .unwrap_or(false)
    }

    /// Reads a location. Unset relation locations read as `false`, all other
    /// unset locations as `undef`.
    pub fn read(&self, location: &Location) -> Value {
        match self.interp.get(location) {
            Some(v) => v.clone(),
            None => {
                if self.is_relation(&location.symbol) {
                    Value::FALSE
                } else {
                    Value::Undef
                }
            }
        }
    }

    pub fn read_nullary(&self, symbol: &str) -> Value {
        self.read(&Location::nullary(symbol))
    }

    pub fn locations(&self) -> impl Iterator<Item = (&Location, &Value)> {
        self.interp.iter()
    }

    /// All values materialized in the interpretation graph (arguments and
    /// results), in canonical order. Choose-rules range over this set.
    pub fn materialized_universe(&self) -> Vec<Value> {
        let mut set = BTreeSet::new();
        set.insert(Value::TRUE);
        set.insert(Value::FALSE);
        set.insert(Value::Undef);
        for (loc, val) in &self.interp {
            for a in &loc.args {
                set.insert(a.clone());
            }
            set.insert(val.clone());
        }
        set.into_iter().collect()
    }

    /// True when applying `updates` would change nothing.
    pub fn is_fixpoint(&self, updates: &UpdateSet) -> bool {
        updates.iter().all(|u| self.read(&u.location) == u.value)
    }

    /// Stable 64-bit digest of the full interpretation, identical across
    /// platforms and runs.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::new();
        for (loc, val) in &self.interp {
            h.update(loc.to_string().as_bytes());
            h.update(b"=");
            h.update(val.to_string().as_bytes());
            h.update(b";");
        }
        h.finish()
    }

    pub fn digest_hex(&self) -> String {
        format!("{:016x}", self.digest())
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.interp.iter()).finish()
    }
}

/// Fires an update set: returns the state differing from `state` exactly at
/// the updated locations.
pub fn fire(state: &State, updates: &UpdateSet) -> Result<State, FireError> {
    if let Some((loc, a, b)) = updates.find_clash() {
        return Err(FireError::Clash {
            location: loc.clone(),
            first: a.clone(),
            second: b.clone(),
        });
    }
    let mut next = state.clone();
    for u in updates.iter() {
        if next.is_relation(&u.location.symbol) && !u.value.is_bool() {
            return Err(FireError::RelationType {
                location: u.location.clone(),
                value: u.value.clone(),
            });
        }
        next.set(u.location.clone(), u.value.clone());
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0} is not an agent")]
pub struct NotAnAgent(pub AgentId);

/// The reduct of `state` to the symbols mentioned in `module_symbols`,
/// extended with `Me` interpreted as the agent.
pub fn agent_view(
    state: &State,
    agent: &AgentId,
    module_symbols: &BTreeSet<Name>,
) -> Result<State, NotAnAgent> {
    let component = state.read(&Location::new("Component", [Value::Agent(agent.clone())]));
    if component.is_undef() {
        return Err(NotAnAgent(agent.clone()));
    }
    let mut vocab = Vocabulary::new();
    for name in module_symbols {
        if let Some(sym) = state.vocabulary().lookup(name) {
            vocab.declare(sym);
        }
    }
    vocab.declare(FunctionSymbol::func("Me", 0));
    let mut view = State::new(Arc::new(vocab));
    for (loc, val) in state.locations() {
        if module_symbols.contains(&loc.symbol) {
            view.set(loc.clone(), val.clone());
        }
    }
    view.set(Location::nullary("Me"), Value::Agent(agent.clone()));
    Ok(view)
}

/// FNV-1a, 64-bit. Used for state digests and config digests; stability
/// across platforms matters more than collision resistance here.
pub struct Fnv64(u64);

impl Fnv64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;

    pub fn new() -> Self {
        Fnv64(Self::OFFSET)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }

    pub fn digest(bytes: &[u8]) -> u64 {
        let mut h = Fnv64::new();
        h.update(bytes);
        h.finish()
    }
}

impl Default for Fnv64 {
    fn default() -> Self {
        Fnv64::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Arc<Vocabulary> {
        Arc::new(
            Vocabulary::new()
                .with(FunctionSymbol::func("Memory", 1))
                .with(FunctionSymbol::relation("MemLocs", 1))
                .with(FunctionSymbol::func("x", 0)),
        )
    }

    #[test]
    fn unset_reads_undef_or_false() {
        let s = State::new(vocab());
        assert_eq!(s.read(&Location::new("Memory", [Value::sym("l1")])), Value::Undef);
        assert_eq!(s.read(&Location::new("MemLocs", [Value::sym("l1")])), Value::FALSE);
    }

    #[test]
    fn fire_empty_is_identity() {
        let s = State::new(vocab());
        let s2 = fire(&s, &UpdateSet::new()).unwrap();
        assert_eq!(s.digest(), s2.digest());
    }

    #[test]
    fn fire_updates_and_frames() {
        let mut s = State::new(vocab());
        s.set(Location::new("Memory", [Value::sym("l1")]), Value::sym("v1"));
        s.set(Location::nullary("x"), Value::Int(1));
        let u = UpdateSet::singleton(Location::new("Memory", [Value::sym("l1")]), Value::sym("v2"));
        let s2 = fire(&s, &u).unwrap();
        assert_eq!(s2.read(&Location::new("Memory", [Value::sym("l1")])), Value::sym("v2"));
        assert_eq!(s2.read(&Location::nullary("x")), Value::Int(1));
    }

    #[test]
    fn fire_reports_clash() {
        let s = State::new(vocab());
        let u = UpdateSet::from_updates(vec![
            Update {
                location: Location::nullary("x"),
                value: Value::Int(1),
            },
            Update {
                location: Location::nullary("x"),
                value: Value::Int(2),
            },
        ]);
        match fire(&s, &u) {
            Err(FireError::Clash { location, .. }) => assert_eq!(location, Location::nullary("x")),
            other => panic!("expected clash, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_identical_updates_are_consistent() {
        let u = UpdateSet::from_updates(vec![
            Update {
                location: Location::nullary("x"),
                value: Value::Int(1),
            },
            Update {
                location: Location::nullary("x"),
                value: Value::Int(1),
            },
        ]);
        assert!(u.is_consistent());
        assert_eq!(u.len(), 1);
    }

    #[test]
    fn relation_update_must_be_boolean() {
        let s = State::new(vocab());
        let u = UpdateSet::singleton(Location::new("MemLocs", [Value::sym("l1")]), Value::Int(3));
        assert!(matches!(fire(&s, &u), Err(FireError::RelationType { .. })));
    }
}
