//! Executable abstract-state-machine engine with distributed and real-time
//! semantics, a rule DSL, the RPC/memory component programs, and trace-level
//! property checkers.
//!
//! The crate is organized along the pipeline: parse component programs
//! ([`dsl`]), wire them into scenarios ([`components`]), execute them as
//! sequential or timed runs ([`runtime`], [`timed`]), and check the produced
//! traces against the interface requirements ([`checker`]).

pub mod checker;
pub mod components;
pub mod dsl;
pub mod eval;
pub mod runtime;
pub mod state;
pub mod term;
pub mod timed;
pub mod value;

pub use eval::{compute_update_set, eval_term, Ctx, Driver, Env, EvalError};
pub use state::{
    agent_view, fire, FireError, FunctionSymbol, Location, State, Update, UpdateSet, Vocabulary,
};
pub use term::{Rule, Term};
pub use value::{AgentId, Name, Tick, Value};
