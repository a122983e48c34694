//! Command-line driver: parse programs, run scenarios (untimed and timed),
//! enumerate small state spaces exhaustively, and check stored traces.
//!
//! Exit codes: 0 all checks pass, 1 a check failed (counterexample written),
//! 2 usage or configuration error, 3 clash abort.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asmrpc_core::checker::{checks_for, known_check, run_check, run_timed_check, CheckReport};
use asmrpc_core::components::{
    build_scenario, builtin_scenario, builtin_scenario_names, parse_scenario, Built, ScenarioKind,
    ScenarioSpec,
};
use asmrpc_core::dsl;
use asmrpc_core::runtime::{
    enumerate_runs_with, run, trace_io, EnumCaps, RunError, SchedulerPolicy,
};
use asmrpc_core::timed::simulate_timed;

#[derive(Parser)]
#[command(
    name = "asmrpc",
    about = "Executable ASM engine for the RPC-memory components",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file path, or a built-in name (problem1..problem5, enum-tiny).
    #[arg(long)]
    scenario: String,
    /// Move budget override.
    #[arg(long)]
    budget: Option<usize>,
    /// Scheduler policy override: random, roundrobin, prompt.
    #[arg(long)]
    policy: Option<String>,
    /// Relay deadline override, in ticks (timed scenarios).
    #[arg(long)]
    delta: Option<u64>,
    /// Downstream return bound override, in ticks (timed scenarios).
    #[arg(long)]
    epsilon: Option<u64>,
    /// Horizon override, in ticks (timed scenarios).
    #[arg(long)]
    horizon: Option<u64>,
    /// Comma-separated check selection (default: the scenario kind's set).
    #[arg(long)]
    checks: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and pretty-print a program file.
    Parse {
        /// Path to a `.asm` program.
        file: PathBuf,
    },
    /// Execute one seeded sequential run and check the trace.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace output path (default: ASMRPC_TRACE_DIR or the working dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute one seeded timed run and check the trace.
    RunTimed {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every sequential run up to a depth and check each trace.
    Enumerate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Abort if the enumeration would emit more traces than this.
        #[arg(long, default_value_t = 200_000)]
        max_traces: usize,
    },
    /// Re-check a stored trace file against its scenario.
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Path to a trace file produced by `run` or `run-timed`.
        #[arg(long)]
        trace: PathBuf,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_spec(args: &ScenarioArgs) -> Result<ScenarioSpec, String> {
    let text = match builtin_scenario(&args.scenario) {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(&args.scenario).map_err(|e| {
            format!(
                "cannot read scenario `{}` (not a file, and not one of: {}): {e}",
                args.scenario,
                builtin_scenario_names().join(", ")
            )
        })?,
    };
    let mut spec = parse_scenario(&text).map_err(|e| e.to_string())?;
    if let Some(b) = args.budget {
        spec.budget = b;
    }
    if let Some(p) = &args.policy {
        spec.policy = SchedulerPolicy::parse(p).ok_or_else(|| format!("unknown policy `{p}`"))?;
    }
    if let Some(d) = args.delta {
        spec.delta = d;
    }
    if let Some(e) = args.epsilon {
        spec.epsilon = e;
    }
    if let Some(h) = args.horizon {
        spec.horizon = h;
    }
    Ok(spec)
}

fn selected_checks(args: &ScenarioArgs, kind: ScenarioKind) -> Result<Vec<String>, String> {
    match &args.checks {
        None => Ok(checks_for(kind).into_iter().map(String::from).collect()),
        Some(list) => {
            let names: Vec<String> = list
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            for n in &names {
                if !known_check(n) {
                    return Err(format!("unknown check `{n}`"));
                }
            }
            Ok(names)
        }
    }
}

fn out_path(out: Option<PathBuf>, scenario: &str, seed: u64, timed: bool) -> PathBuf {
    match out {
        Some(p) => p,
        None => {
            let dir = std::env::var_os("ASMRPC_TRACE_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            let stem = Path::new(scenario)
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| scenario.to_string());
            let kind = if timed { "timed" } else { "run" };
            dir.join(format!("{stem}-{kind}-{seed}.trace"))
        }
    }
}

/// Prints reports, writes the first counterexample next to `trace_path`, and
/// reduces to an exit code.
fn report_outcome(reports: &[CheckReport], trace_path: &Path) -> ExitCode {
    let mut failed = false;
    for r in reports {
        println!("{}", r.summary_line());
        if !r.passed {
            failed = true;
        }
    }
    if failed {
        for r in reports {
            if let Some(cx) = &r.counterexample {
                let cex_path = trace_path.with_extension("cex.trace");
                if std::fs::write(&cex_path, &cx.trace_text).is_ok() {
                    eprintln!("counterexample written to {}", cex_path.display());
                }
                break;
            }
        }
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_parse(file: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", file.display())),
    };
    let program = match dsl::parse_program(&text) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Err(e) = dsl::expand_macros(&program.modules, &program.macros) {
        return fail(e);
    }
    // Diagnostics are advisory here; a standalone file has no scenario
    // vocabulary to be strict against.
    print!("{}", dsl::render_program(&program));
    eprintln!(
        "parsed: {} module(s), {} macro(s), {} constant(s)",
        program.modules.len(),
        program.macros.len(),
        program.constants.len()
    );
    ExitCode::SUCCESS
}

fn cmd_run(args: ScenarioArgs, seed: u64, out: Option<PathBuf>) -> ExitCode {
    let spec = match load_spec(&args) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let checks = match selected_checks(&args, spec.kind) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (built, warnings) = match build_scenario(&spec) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let Built::Untimed(cfg) = built else {
        return fail("timed scenario; use `run-timed`");
    };
    let trace = match run(&cfg, seed) {
        Ok(t) => t,
        Err(RunError::Clash { location, .. }) => {
            eprintln!("clash abort at {location}");
            return ExitCode::from(3);
        }
        Err(e) => return fail(e),
    };
    let path = out_path(out, &args.scenario, seed, false);
    if let Err(e) = std::fs::write(&path, trace_io::write_trace(&trace)) {
        return fail(format!("cannot write {}: {e}", path.display()));
    }
    println!(
        "trace: {} ({} moves, stop={})",
        path.display(),
        trace.moves.len(),
        trace.stop.name()
    );
    let reports: Vec<CheckReport> = checks
        .iter()
        .map(|c| run_check(c, &cfg, &trace))
        .collect();
    report_outcome(&reports, &path)
}

fn cmd_run_timed(args: ScenarioArgs, seed: u64, out: Option<PathBuf>) -> ExitCode {
    let spec = match load_spec(&args) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let checks = match selected_checks(&args, spec.kind) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (built, warnings) = match build_scenario(&spec) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let Built::Timed(cfg) = built else {
        return fail("untimed scenario; use `run`");
    };
    let trace = match simulate_timed(&cfg, seed) {
        Ok(t) => t,
        Err(asmrpc_core::timed::TimedError::Clash { location, tick }) => {
            eprintln!("clash abort at {location} (tick {tick})");
            return ExitCode::from(3);
        }
        Err(e) => return fail(e),
    };
    let path = out_path(out, &args.scenario, seed, true);
    if let Err(e) = std::fs::write(&path, trace_io::write_timed_trace(&trace)) {
        return fail(format!("cannot write {}: {e}", path.display()));
    }
    println!(
        "trace: {} ({} entries, stop={})",
        path.display(),
        trace.entries.len(),
        trace.stop.name()
    );
    let reports: Vec<CheckReport> = checks
        .iter()
        .map(|c| run_timed_check(c, &cfg, &trace))
        .collect();
    report_outcome(&reports, &path)
}

fn cmd_enumerate(args: ScenarioArgs, depth: usize, max_traces: usize) -> ExitCode {
    let spec = match load_spec(&args) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let checks = match selected_checks(&args, spec.kind) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (built, _) = match build_scenario(&spec) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let Built::Untimed(cfg) = built else {
        return fail("enumeration applies to untimed scenarios");
    };
    let caps = EnumCaps {
        max_traces,
        max_nodes: 50 * max_traces.max(1),
    };
    // Depth-truncated traces legitimately contain open operations, so
    // liveness only runs when selected explicitly.
    let checks: Vec<String> = if args.checks.is_some() {
        checks
    } else {
        checks.into_iter().filter(|c| c != "liveness").collect()
    };
    let mut failures: BTreeMap<String, u64> = BTreeMap::new();
    let mut first_cx: Option<(String, String)> = None;
    let stats = enumerate_runs_with(&cfg, depth, caps, |trace| {
        for c in &checks {
            let r = run_check(c, &cfg, trace);
            if !r.passed {
                *failures.entry(r.name.clone()).or_insert(0) += 1;
                if first_cx.is_none() {
                    if let Some(cx) = r.counterexample {
                        first_cx = Some((r.name, cx.trace_text));
                    }
                }
            }
        }
    });
    let stats = match stats {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    println!(
        "enumerated {} traces ({} duplicate move-sequences suppressed, {} nodes)",
        stats.traces, stats.duplicates, stats.nodes
    );
    if failures.is_empty() {
        for c in &checks {
            println!("{c}: PASS over {} traces", stats.traces);
        }
        ExitCode::SUCCESS
    } else {
        for (name, count) in &failures {
            println!("{name}: FAIL on {count} trace(s)");
        }
        if let Some((name, text)) = first_cx {
            let path = PathBuf::from(format!("counterexample-{name}.trace"));
            if std::fs::write(&path, text).is_ok() {
                eprintln!("counterexample written to {}", path.display());
            }
        }
        ExitCode::from(1)
    }
}

fn cmd_check(args: ScenarioArgs, trace_path: &Path) -> ExitCode {
    let spec = match load_spec(&args) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let checks = match selected_checks(&args, spec.kind) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let (built, _) = match build_scenario(&spec) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let text = match std::fs::read_to_string(trace_path) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", trace_path.display())),
    };
    let parsed = match trace_io::parse_trace_file(&text) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    match (built, parsed) {
        (Built::Untimed(cfg), trace_io::TraceFile::Untimed(trace)) => {
            if trace.config_digest != cfg.config_digest {
                return fail("trace was produced from a different scenario (digest mismatch)");
            }
            // Structural validity gates the semantic checks: a tampered
            // trace fails here and the rest would be meaningless.
            let gate = run_check("validity", &cfg, &trace);
            if !gate.passed {
                return report_outcome(&[gate], trace_path);
            }
            let reports: Vec<CheckReport> = checks
                .iter()
                .filter(|c| c.as_str() != "validity")
                .map(|c| run_check(c, &cfg, &trace))
                .collect();
            report_outcome(&reports, trace_path)
        }
        (Built::Timed(cfg), trace_io::TraceFile::Timed(trace)) => {
            if trace.config_digest != cfg.base.config_digest {
                return fail("trace was produced from a different scenario (digest mismatch)");
            }
            let gate = run_timed_check("prerun", &cfg, &trace);
            if !gate.passed {
                return report_outcome(&[gate], trace_path);
            }
            let reports: Vec<CheckReport> = checks
                .iter()
                .filter(|c| c.as_str() != "prerun")
                .map(|c| run_timed_check(c, &cfg, &trace))
                .collect();
            report_outcome(&reports, trace_path)
        }
        _ => fail("trace kind does not match the scenario kind"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Parse { file } => cmd_parse(&file),
        Command::Run {
            scenario,
            seed,
            out,
        } => cmd_run(scenario, seed, out),
        Command::RunTimed {
            scenario,
            seed,
            out,
        } => cmd_run_timed(scenario, seed, out),
        Command::Enumerate {
            scenario,
            depth,
            max_traces,
        } => cmd_enumerate(scenario, depth, max_traces),
        Command::Check { scenario, trace } => cmd_check(scenario, &trace),
    }
}
