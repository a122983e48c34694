//! The component programs and scenario wiring.
//!
//! Each component ships as a `.asm` source bundled with the crate; a
//! [`ScenarioSpec`] names the components, pool sizes, wiring constants,
//! universes and oracles, and [`build_scenario`] turns it into an executable
//! configuration (untimed or timed).

mod scn;

pub use scn::{builtin_scenario, builtin_scenario_names, parse_scenario, render_canonical};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::dsl::{self, ProgramDef};
use crate::runtime::{OracleSpec, RunConfig, SchedulerPolicy};
use crate::state::{Fnv64, FunctionSymbol, Location, State, Vocabulary};
use crate::timed::TimedConfig;
use crate::value::{AgentId, Name, Tick, Value};

pub const MACROS_UNTIMED: &str = include_str!("../../programs/macros_untimed.asm");
pub const MACROS_TIMED: &str = include_str!("../../programs/macros_timed.asm");
pub const MEMORY_SRC: &str = include_str!("../../programs/memory.asm");
pub const CALLER_SRC: &str = include_str!("../../programs/caller.asm");
pub const RPC_SRC: &str = include_str!("../../programs/rpc.asm");
pub const MEMORY_IMPL_SRC: &str = include_str!("../../programs/memory_impl.asm");
pub const LOSSY_RPC_SRC: &str = include_str!("../../programs/lossy_rpc.asm");
pub const RPC_IMPL_SRC: &str = include_str!("../../programs/rpc_impl.asm");
pub const RECYCLER_SRC: &str = include_str!("../../programs/recycler.asm");

/// The seven shipped components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ComponentKind {
    Memory,
    ReliableMemory,
    Caller,
    Rpc,
    MemoryImpl,
    LossyRpc,
    RpcImpl,
}

impl ComponentKind {
    /// The bundled program source, byte-identical per kind. A reliable
    /// memory is the memory program with the Fail oracle forced false.
    pub fn source(&self) -> &'static str {
        match self {
            ComponentKind::Memory | ComponentKind::ReliableMemory => MEMORY_SRC,
            ComponentKind::Caller => CALLER_SRC,
            ComponentKind::Rpc => RPC_SRC,
            ComponentKind::MemoryImpl => MEMORY_IMPL_SRC,
            ComponentKind::LossyRpc => LOSSY_RPC_SRC,
            ComponentKind::RpcImpl => RPC_IMPL_SRC,
        }
    }

    pub fn module_name(&self) -> &'static str {
        match self {
            ComponentKind::Memory | ComponentKind::ReliableMemory => "memory",
            ComponentKind::Caller => "caller",
            ComponentKind::Rpc => "rpc",
            ComponentKind::MemoryImpl => "memory_impl",
            ComponentKind::LossyRpc => "lossy_rpc",
            ComponentKind::RpcImpl => "rpc_impl",
        }
    }

    pub fn requires_timed(&self) -> bool {
        matches!(self, ComponentKind::LossyRpc | ComponentKind::RpcImpl)
    }
}

/// Scenario families; each selects components, a macro library and the
/// checks that apply to its traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Caller + memory (Problem 1).
    Memory,
    /// Caller + memory with Fail forced false (Problem 2).
    ReliableMemory,
    /// Caller + implementation + RPC + reliable memory (Problem 3).
    MemoryImpl,
    /// Caller + lossy RPC + reliable memory, timed (Problem 4).
    LossyRpc,
    /// Caller + RPC implementation + lossy RPC + reliable memory, timed
    /// (Problem 5).
    RpcImpl,
    /// User-supplied program; run-validity checks only.
    Custom,
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Option<ScenarioKind> {
        Some(match s {
            "memory" => ScenarioKind::Memory,
            "reliable-memory" => ScenarioKind::ReliableMemory,
            "memory-impl" => ScenarioKind::MemoryImpl,
            "lossy-rpc" => ScenarioKind::LossyRpc,
            "rpc-impl" => ScenarioKind::RpcImpl,
            "custom" => ScenarioKind::Custom,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Memory => "memory",
            ScenarioKind::ReliableMemory => "reliable-memory",
            ScenarioKind::MemoryImpl => "memory-impl",
            ScenarioKind::LossyRpc => "lossy-rpc",
            ScenarioKind::RpcImpl => "rpc-impl",
            ScenarioKind::Custom => "custom",
        }
    }

    pub fn is_timed(&self) -> bool {
        matches!(self, ScenarioKind::LossyRpc | ScenarioKind::RpcImpl)
    }

    /// The components a scenario of this kind is made of.
    pub fn component_kinds(&self) -> &'static [ComponentKind] {
        match self {
            ScenarioKind::Memory => &[ComponentKind::Caller, ComponentKind::Memory],
            ScenarioKind::ReliableMemory => {
                &[ComponentKind::Caller, ComponentKind::ReliableMemory]
            }
            ScenarioKind::MemoryImpl => &[
                ComponentKind::Caller,
                ComponentKind::MemoryImpl,
                ComponentKind::Rpc,
                ComponentKind::ReliableMemory,
            ],
            ScenarioKind::LossyRpc => &[
                ComponentKind::Caller,
                ComponentKind::LossyRpc,
                ComponentKind::ReliableMemory,
            ],
            ScenarioKind::RpcImpl => &[
                ComponentKind::Caller,
                ComponentKind::RpcImpl,
                ComponentKind::LossyRpc,
                ComponentKind::ReliableMemory,
            ],
            ScenarioKind::Custom => &[],
        }
    }

    /// Wiring constants this kind requires, with their expected targets.
    fn required_wiring(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            ScenarioKind::Memory | ScenarioKind::ReliableMemory => {
                &[("MemComponent", "memory")]
            }
            ScenarioKind::MemoryImpl => &[
                ("MemComponent", "memory_impl"),
                ("RPCComponent", "rpc"),
                ("Destination", "memory"),
            ],
            ScenarioKind::LossyRpc => {
                &[("MemComponent", "lossy_rpc"), ("Destination", "memory")]
            }
            ScenarioKind::RpcImpl => &[
                ("MemComponent", "rpc_impl"),
                ("LossyRPC", "lossy_rpc"),
                ("Destination", "memory"),
            ],
            ScenarioKind::Custom => &[],
        }
    }
}

/// A parsed scenario: components, pools, wiring, universes and oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Module name to agent pool size.
    pub components: BTreeMap<Name, usize>,
    /// Wiring constant to target module name.
    pub wiring: BTreeMap<Name, Name>,
    pub mem_locs: Vec<Name>,
    pub mem_vals: Vec<Name>,
    pub init_val: Name,
    pub arg_num: BTreeMap<Name, i64>,
    /// Oracle specs keyed by symbol or `module:symbol` for per-component
    /// instances.
    pub oracles: BTreeMap<Name, OracleSpec>,
    pub budget: usize,
    pub policy: SchedulerPolicy,
    pub delta: Tick,
    pub epsilon: Tick,
    pub horizon: Tick,
    /// Wake-delay range per module for timed scheduling.
    pub delays: BTreeMap<Name, (Tick, Tick)>,
    /// Inline program source for custom scenarios.
    pub program_text: Option<String>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            kind: ScenarioKind::Memory,
            components: BTreeMap::new(),
            wiring: BTreeMap::new(),
            mem_locs: Vec::new(),
            mem_vals: Vec::new(),
            init_val: "v1".into(),
            arg_num: BTreeMap::new(),
            oracles: BTreeMap::new(),
            budget: 5_000,
            policy: SchedulerPolicy::Random,
            delta: 10,
            epsilon: 25,
            horizon: 10_000,
            delays: BTreeMap::new(),
            program_text: None,
        }
    }
}

impl ScenarioSpec {
    /// Stable digest of the canonical scenario text, recorded in traces.
    pub fn digest(&self) -> u64 {
        Fnv64::digest(render_canonical(self).as_bytes())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("program error: {0}")]
    Program(String),
    #[error("wiring constant `{constant}` points at `{target}`, which has no agents")]
    Wiring { constant: Name, target: Name },
    #[error("InitVal `{0}` is not a member of MemVals")]
    BadSpec(Name),
    #[error("component `{component}` requires parameter {what}")]
    BadParams { component: Name, what: String },
    #[error("program does not validate: {0}")]
    Invalid(String),
}

/// A built scenario, ready to execute.
#[derive(Debug, Clone)]
pub enum Built {
    Untimed(RunConfig),
    Timed(TimedConfig),
}

impl Built {
    pub fn run_config(&self) -> &RunConfig {
        match self {
            Built::Untimed(c) => c,
            Built::Timed(t) => &t.base,
        }
    }
}

/// Returns the bundled source of a component. `ReliableMemory` shares the
/// memory source; forcing its Fail oracle false happens during wiring.
pub fn build_component(kind: ComponentKind) -> &'static str {
    kind.source()
}

fn interface_vocabulary(timed: bool) -> Vocabulary {
    let mut v = Vocabulary::new();
    for f in [
        "CallMade",
        "CallSender",
        "CallName",
        "CallArgs",
        "CallReply",
        "CallReplyValue",
        "Component",
        "Memory",
        "ArgNum",
    ] {
        v.declare(FunctionSymbol::func(f, 1));
    }
    v.declare(FunctionSymbol::func("Me", 0));
    v.declare(FunctionSymbol::relation("MemLocs", 1));
    v.declare(FunctionSymbol::relation("MemVals", 1));
    for e in ["Fail", "Succeed", "MakeCall", "GetName", "GetArgs", "Retry"] {
        v.declare(FunctionSymbol::external(e, 0));
    }
    if timed {
        v.declare(FunctionSymbol::func("CT", 0));
        v.declare(FunctionSymbol::func("delta", 0));
        v.declare(FunctionSymbol::func("epsilon", 0));
        for f in ["CallInTime", "CallOutTime", "ReturnTime"] {
            v.declare(FunctionSymbol::func(f, 1));
        }
    }
    v
}

/// The untimed or timed interface vocabulary, as used by every shipped
/// scenario; useful for validating programs on their own.
pub fn scenario_vocabulary(spec: &ScenarioSpec, program: &ProgramDef) -> Vocabulary {
    let mut v = interface_vocabulary(spec.kind.is_timed());
    for c in &program.constants {
        v.declare(FunctionSymbol::func(c, 0));
    }
    for (u, members) in &program.universes {
        v.declare(FunctionSymbol::relation(u, 1));
        for m in members {
            v.declare(FunctionSymbol::func(m, 0));
        }
    }
    for c in spec.mem_locs.iter().chain(&spec.mem_vals) {
        v.declare(FunctionSymbol::func(c, 0));
    }
    v.declare(FunctionSymbol::func(&spec.init_val, 0));
    for w in spec.wiring.keys() {
        v.declare(FunctionSymbol::func(w, 0));
    }
    for p in spec.arg_num.keys() {
        v.declare(FunctionSymbol::func(p, 0));
    }
    // Custom programs carry no declarations; infer symbols from use.
    if spec.kind == ScenarioKind::Custom {
        for rule in program.modules.values() {
            infer_symbols(rule, &mut v);
        }
    }
    v
}

fn infer_symbols(rule: &crate::dsl::DslRule, v: &mut Vocabulary) {
    use crate::dsl::{RuleKind, TermKind};
    fn term(t: &crate::dsl::DslTerm, v: &mut Vocabulary) {
        match &t.kind {
            TermKind::Apply(f, args) => {
                if !v.contains(f) {
                    v.declare(FunctionSymbol::func(f, args.len()));
                }
                for a in args {
                    term(a, v);
                }
            }
            TermKind::List(items) => {
                for i in items {
                    term(i, v);
                }
            }
            _ => {}
        }
    }
    match &rule.kind {
        RuleKind::Update {
            symbol,
            args,
            value,
        } => {
            if !v.contains(symbol) {
                v.declare(FunctionSymbol::func(symbol, args.len()));
            }
            for a in args {
                term(a, v);
            }
            term(value, v);
        }
        RuleKind::Block(rules) => {
            for r in rules {
                infer_symbols(r, v);
            }
        }
        RuleKind::Cond {
            guard,
            then_rule,
            else_rule,
        } => {
            term(guard, v);
            infer_symbols(then_rule, v);
            infer_symbols(else_rule, v);
        }
        RuleKind::Choose {
            condition, body, ..
        } => {
            term(condition, v);
            infer_symbols(body, v);
        }
        RuleKind::MacroCall { args, .. } => {
            for a in args {
                term(a, v);
            }
        }
    }
}

/// Agents of one scenario: `module.0`, `module.1`, ... per pool.
fn make_agents(spec: &ScenarioSpec) -> BTreeMap<AgentId, Name> {
    let mut agents = BTreeMap::new();
    for (module, pool) in &spec.components {
        for i in 0..*pool {
            agents.insert(AgentId::new(&format!("{module}.{i}")), module.clone());
        }
    }
    agents
}

/// Builds the initial state: every memory location holds InitVal, the
/// universes and ArgNum are materialized, constants denote themselves, all
/// interface functions are undef and CallMade is false for every agent.
pub fn initial_state(
    spec: &ScenarioSpec,
    program: &ProgramDef,
    agents: &BTreeMap<AgentId, Name>,
) -> Result<State, BuildError> {
    if !spec.mem_vals.is_empty() && !spec.mem_vals.contains(&spec.init_val) {
        return Err(BuildError::BadSpec(spec.init_val.clone()));
    }
    let vocab = Arc::new(scenario_vocabulary(spec, program));
    let mut s = State::new(vocab);
    for c in &program.constants {
        s.set(Location::nullary(c), Value::Sym(c.clone()));
    }
    for (u, members) in &program.universes {
        for m in members {
            s.set(Location::nullary(m), Value::Sym(m.clone()));
            s.set(Location::new(u, [Value::Sym(m.clone())]), Value::TRUE);
        }
    }
    for l in &spec.mem_locs {
        s.set(Location::nullary(l), Value::Sym(l.clone()));
        s.set(Location::new("MemLocs", [Value::Sym(l.clone())]), Value::TRUE);
        s.set(
            Location::new("Memory", [Value::Sym(l.clone())]),
            Value::Sym(spec.init_val.clone()),
        );
    }
    for v in &spec.mem_vals {
        s.set(Location::nullary(v), Value::Sym(v.clone()));
        s.set(Location::new("MemVals", [Value::Sym(v.clone())]), Value::TRUE);
    }
    s.set(
        Location::nullary(&spec.init_val),
        Value::Sym(spec.init_val.clone()),
    );
    for (p, n) in &spec.arg_num {
        s.set(Location::nullary(p), Value::Sym(p.clone()));
        s.set(Location::new("ArgNum", [Value::Sym(p.clone())]), Value::Int(*n));
    }
    for (constant, target) in &spec.wiring {
        s.set(Location::nullary(constant), Value::Sym(target.clone()));
    }
    for (agent, module) in agents {
        s.set(
            Location::new("Component", [Value::Agent(agent.clone())]),
            Value::Sym(module.clone()),
        );
        s.set(
            Location::new("CallMade", [Value::Agent(agent.clone())]),
            Value::FALSE,
        );
    }
    if spec.kind.is_timed() {
        s.set(Location::nullary("CT"), Value::Tick(0));
        s.set(Location::nullary("delta"), Value::Tick(spec.delta));
        s.set(Location::nullary("epsilon"), Value::Tick(spec.epsilon));
        // Timeline-backed externals live in the state under their plain
        // name; a `module:symbol` spec materializes the same location, so
        // conflicting constants are rejected.
        let mut seen: BTreeMap<Name, Value> = BTreeMap::new();
        for (symbol, oracle) in &spec.oracles {
            if !timeline_symbol(symbol) {
                continue;
            }
            let initial = match oracle {
                OracleSpec::Constant(v) => v.clone(),
                OracleSpec::Scripted(vs) => vs.first().cloned().unwrap_or(Value::Undef),
                OracleSpec::Random { choices, .. } => {
                    choices.first().map(|(v, _)| v.clone()).unwrap_or(Value::Undef)
                }
            };
            let plain: Name = match symbol.rsplit_once(':') {
                Some((_, s)) => s.into(),
                None => symbol.clone(),
            };
            if let Some(prev) = seen.insert(plain.clone(), initial.clone()) {
                if prev != initial {
                    return Err(BuildError::Program(format!(
                        "conflicting timeline values for `{plain}`"
                    )));
                }
            }
            s.set(Location::nullary(&plain), initial);
        }
    }
    Ok(s)
}

/// Workload symbols are consumed per move; everything else external is a
/// piecewise-constant timeline in timed runs.
pub fn timeline_symbol(symbol: &str) -> bool {
    let base = symbol.rsplit(':').next().unwrap_or(symbol);
    !matches!(base, "MakeCall" | "GetName" | "GetArgs")
}

/// Assembles the full program of a scenario: macro library plus one source
/// per component (plus the recycler for timed kinds).
pub fn scenario_program(spec: &ScenarioSpec) -> Result<ProgramDef, BuildError> {
    let mut program = ProgramDef::default();
    let macro_lib = if spec.kind.is_timed() {
        MACROS_TIMED
    } else {
        MACROS_UNTIMED
    };
    let lib = dsl::parse_program(macro_lib).map_err(|e| BuildError::Program(e.to_string()))?;
    program
        .merge(&lib)
        .map_err(BuildError::Program)?;
    if spec.kind == ScenarioKind::Custom {
        let text = spec.program_text.as_deref().ok_or(BuildError::BadParams {
            component: "custom".into(),
            what: "program text".into(),
        })?;
        let def = dsl::parse_program(text).map_err(|e| BuildError::Program(e.to_string()))?;
        program.merge(&def).map_err(BuildError::Program)?;
        return Ok(program);
    }
    let mut sources: Vec<&'static str> = spec
        .kind
        .component_kinds()
        .iter()
        .map(|k| k.source())
        .collect();
    if spec.kind.is_timed() {
        sources.push(RECYCLER_SRC);
    }
    sources.dedup();
    for src in sources {
        let def = dsl::parse_program(src).map_err(|e| BuildError::Program(e.to_string()))?;
        program.merge(&def).map_err(BuildError::Program)?;
    }
    Ok(program)
}

/// Builds a runnable configuration from a scenario. Returns the config plus
/// any non-fatal warnings (pool sizing).
pub fn build_scenario(spec: &ScenarioSpec) -> Result<(Built, Vec<String>), BuildError> {
    let mut warnings = Vec::new();
    let program = scenario_program(spec)?;

    // Every module the kind requires must have agents.
    for kind in spec.kind.component_kinds() {
        let module: Name = kind.module_name().into();
        if spec.components.get(&module).copied().unwrap_or(0) == 0 {
            return Err(BuildError::BadParams {
                component: module,
                what: "a non-empty agent pool".into(),
            });
        }
    }
    for (constant, expected_target) in spec.kind.required_wiring() {
        let target = spec.wiring.get(*constant).ok_or_else(|| BuildError::Wiring {
            constant: Name::from(*constant),
            target: Name::from(*expected_target),
        })?;
        if spec.components.get(target).copied().unwrap_or(0) == 0 {
            return Err(BuildError::Wiring {
                constant: Name::from(*constant),
                target: target.clone(),
            });
        }
    }
    for (module, pool) in &spec.components {
        if program.modules.get(module).is_none() {
            return Err(BuildError::Program(format!(
                "component `{module}` has no module in the program"
            )));
        }
        if *pool == 1 && module.as_ref() != "recycler" && module.as_ref() != "caller" {
            warnings.push(format!(
                "pool of `{module}` has a single agent; callers may stall while it is busy"
            ));
        }
    }

    let vocab = scenario_vocabulary(spec, &program);
    let diags = dsl::validate_program(&program, &vocab);
    let errors: Vec<String> = diags
        .iter()
        .filter(|d| d.severity == dsl::Severity::Error)
        .map(|d| d.message.clone())
        .collect();
    if !errors.is_empty() {
        return Err(BuildError::Invalid(errors.join("; ")));
    }

    let modules = dsl::expand_macros(&program.modules, &program.macros)
        .map_err(|e| BuildError::Program(e.to_string()))?;
    let module_symbols: BTreeMap<Name, BTreeSet<Name>> = modules
        .iter()
        .map(|(name, rule)| (name.clone(), rule.symbols()))
        .collect();
    let agents = make_agents(spec);
    let initial = initial_state(spec, &program, &agents)?;

    let mut oracles = spec.oracles.clone();
    // A reliable memory never fails: force the memory instance's Fail false.
    let has_reliable = spec
        .kind
        .component_kinds()
        .contains(&ComponentKind::ReliableMemory);
    if has_reliable {
        oracles.insert("memory:Fail".into(), OracleSpec::constant(Value::FALSE));
    }

    let gated: BTreeSet<Name> = ["MakeCall".into()].into_iter().collect();
    let workload: BTreeSet<Name> = ["MakeCall".into(), "GetName".into(), "GetArgs".into()]
        .into_iter()
        .collect();

    let base = RunConfig {
        program,
        modules,
        module_symbols,
        agents,
        initial,
        oracles,
        workload,
        gated,
        policy: spec.policy,
        budget: spec.budget,
        config_digest: spec.digest(),
    };

    if spec.kind.is_timed() {
        let mut delays = spec.delays.clone();
        delays.entry("recycler".into()).or_insert((0, 0));
        Ok((
            Built::Timed(TimedConfig {
                base,
                delta: spec.delta,
                epsilon: spec.epsilon,
                horizon: spec.horizon,
                delays,
            }),
            warnings,
        ))
    } else {
        Ok((Built::Untimed(base), warnings))
    }
}

/// List helpers mirroring the interface's First/Second/Length functions.
pub fn arg_list(values: impl Into<Vec<Value>>) -> Value {
    Value::List(values.into())
}

pub fn first(v: &Value) -> Value {
    match v {
        Value::List(items) => items.first().cloned().unwrap_or(Value::Undef),
        _ => Value::Undef,
    }
}

pub fn second(v: &Value) -> Value {
    match v {
        Value::List(items) => items.get(1).cloned().unwrap_or(Value::Undef),
        _ => Value::Undef,
    }
}

pub fn length(v: &Value) -> Value {
    match v {
        Value::List(items) => Value::Int(items.len() as i64),
        _ => Value::Undef,
    }
}
