//! External-function oracles.
//!
//! A reading is only consumed by a recorded move; scheduler probes peek at
//! the value the next consumption would yield without advancing anything,
//! so a pulse meant for one agent is never burned by another agent's probe.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::state::Fnv64;
use crate::value::{Name, Value};

/// How the environment answers reads of one external symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    /// Fixed sequence, consumed per read; the last value repeats forever.
    Scripted(Vec<Value>),
    /// Weighted draw from a finite alphabet. With a fairness constraint the
    /// given value is forced at least once in every `window` consecutive
    /// reads.
    Random {
        choices: Vec<(Value, u32)>,
        fair: Option<Fairness>,
    },
    Constant(Value),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fairness {
    pub value: Value,
    pub window: u32,
}

impl OracleSpec {
    pub fn constant(v: Value) -> Self {
        OracleSpec::Constant(v)
    }

    /// `n` true pulses, then false forever.
    pub fn pulses(n: usize) -> Self {
        let mut vs = vec![Value::TRUE; n];
        vs.push(Value::FALSE);
        OracleSpec::Scripted(vs)
    }

    /// The distinct values this oracle can yield next, in canonical order,
    /// honoring a pending fairness obligation. Used by the enumerator.
    pub fn alphabet(&self, cursor: usize, fair_run: u32) -> Vec<Value> {
        match self {
            OracleSpec::Scripted(vs) => {
                let i = cursor.min(vs.len().saturating_sub(1));
                vec![vs[i].clone()]
            }
            OracleSpec::Constant(v) => vec![v.clone()],
            OracleSpec::Random { choices, fair } => {
                if let Some(f) = fair {
                    if fair_run + 1 >= f.window {
                        return vec![f.value.clone()];
                    }
                }
                let mut vals: Vec<Value> = choices.iter().map(|(v, _)| v.clone()).collect();
                vals.sort();
                vals.dedup();
                vals
            }
        }
    }
}

/// Live state of one oracle stream.
#[derive(Debug, Clone)]
pub struct OracleStream {
    pub spec: OracleSpec,
    cursor: usize,
    /// Consecutive consumed readings since the fair value last appeared.
    fair_run: u32,
    rng: ChaCha8Rng,
    pending: Option<Value>,
}

impl OracleStream {
    fn new(spec: OracleSpec, seed: u64, symbol: &str) -> Self {
        // Independent, reproducible stream per symbol.
        let stream_seed = seed ^ Fnv64::digest(symbol.as_bytes());
        OracleStream {
            spec,
            cursor: 0,
            fair_run: 0,
            rng: ChaCha8Rng::seed_from_u64(stream_seed),
            pending: None,
        }
    }

    fn draw(&mut self) -> Value {
        match &self.spec {
            OracleSpec::Scripted(vs) => {
                let i = self.cursor.min(vs.len().saturating_sub(1));
                vs[i].clone()
            }
            OracleSpec::Constant(v) => v.clone(),
            OracleSpec::Random { choices, fair } => {
                if let Some(f) = fair {
                    if self.fair_run + 1 >= f.window {
                        return f.value.clone();
                    }
                }
                let total: u32 = choices.iter().map(|(_, w)| w).sum();
                let mut pick = self.rng.gen_range(0..total.max(1));
                for (v, w) in choices {
                    if pick < *w {
                        return v.clone();
                    }
                    pick -= w;
                }
                choices.last().map(|(v, _)| v.clone()).unwrap_or(Value::Undef)
            }
        }
    }

    /// The value the next consumption will yield; does not consume.
    pub fn peek(&mut self) -> Value {
        if self.pending.is_none() {
            self.pending = Some(self.draw());
        }
        self.pending.clone().unwrap()
    }

    /// Consumes the pending reading.
    pub fn commit(&mut self) {
        let v = self.pending.take().unwrap_or_else(|| self.draw());
        self.cursor += 1;
        let is_fair_value = match &self.spec {
            OracleSpec::Random { fair: Some(f), .. } => v == f.value,
            _ => false,
        };
        self.fair_run = if is_fair_value { 0 } else { self.fair_run + 1 };
    }

    /// Peek-and-consume in one step.
    pub fn next(&mut self) -> Value {
        let v = self.peek();
        self.commit();
        v
    }

    /// Whether consuming a reading advances the external world: a constant
    /// (or exhausted script) does not, so a move that changes no location
    /// and reads nothing fresh is a stutter.
    pub fn progressing(&self) -> bool {
        match &self.spec {
            OracleSpec::Scripted(vs) => self.cursor + 1 < vs.len(),
            OracleSpec::Constant(_) => false,
            OracleSpec::Random { .. } => true,
        }
    }

    pub fn reads_consumed(&self) -> usize {
        self.cursor
    }
}

/// All oracle streams of one run.
#[derive(Debug, Clone)]
pub struct OracleTable {
    streams: BTreeMap<Name, OracleStream>,
}

impl OracleTable {
    pub fn new(specs: &BTreeMap<Name, OracleSpec>, seed: u64) -> Self {
        OracleTable {
            streams: specs
                .iter()
                .map(|(name, spec)| (name.clone(), OracleStream::new(spec.clone(), seed, name)))
                .collect(),
        }
    }

    pub fn stream_mut(&mut self, symbol: &str) -> Option<&mut OracleStream> {
        self.streams.get_mut(symbol)
    }

    pub fn stream(&self, symbol: &str) -> Option<&OracleStream> {
        self.streams.get(symbol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_repeats_last_when_exhausted() {
        let mut s = OracleStream::new(OracleSpec::Scripted(vec![Value::TRUE]), 1, "X");
        assert_eq!(s.next(), Value::TRUE);
        assert_eq!(s.next(), Value::TRUE);
        assert!(!s.progressing());
    }

    #[test]
    fn peek_does_not_consume() {
        let mut s = OracleStream::new(
            OracleSpec::Scripted(vec![Value::TRUE, Value::FALSE]),
            1,
            "X",
        );
        assert_eq!(s.peek(), Value::TRUE);
        assert_eq!(s.peek(), Value::TRUE);
        assert_eq!(s.next(), Value::TRUE);
        assert_eq!(s.peek(), Value::FALSE);
    }

    #[test]
    fn fairness_window_guarantees_a_true() {
        let spec = OracleSpec::Random {
            // Heavily biased toward false; the window must still force trues.
            choices: vec![(Value::FALSE, 1000), (Value::TRUE, 1)],
            fair: Some(Fairness {
                value: Value::TRUE,
                window: 5,
            }),
        };
        for seed in 0..20 {
            let mut s = OracleStream::new(spec.clone(), seed, "Succeed");
            let mut run = 0u32;
            for _ in 0..500 {
                if s.next() == Value::TRUE {
                    run = 0;
                } else {
                    run += 1;
                    assert!(run < 5, "five consecutive false readings (seed {seed})");
                }
            }
        }
    }

    #[test]
    fn constant_oracle_never_progresses() {
        let mut s = OracleStream::new(OracleSpec::constant(Value::FALSE), 3, "Fail");
        assert_eq!(s.next(), Value::FALSE);
        assert!(!s.progressing());
    }

    #[test]
    fn streams_are_seed_deterministic() {
        let spec = OracleSpec::Random {
            choices: vec![(Value::TRUE, 1), (Value::FALSE, 1)],
            fair: None,
        };
        let seq = |seed: u64| -> Vec<Value> {
            let mut s = OracleStream::new(spec.clone(), seed, "Fail");
            (0..32).map(|_| s.next()).collect()
        };
        assert_eq!(seq(7), seq(7));
        assert_ne!(seq(7), seq(8));
    }
}
