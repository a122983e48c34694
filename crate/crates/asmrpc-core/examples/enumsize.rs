use asmrpc_core::components::{build_scenario, builtin_scenario, parse_scenario, Built};
use asmrpc_core::runtime::{enumerate_runs_with, EnumCaps};
use std::time::Instant;

fn main() {
    let spec = parse_scenario(builtin_scenario("enum-tiny").unwrap()).unwrap();
    let (built, _) = build_scenario(&spec).unwrap();
    let Built::Untimed(cfg) = built else { panic!() };
    for depth in [6, 8, 10] {
        let t0 = Instant::now();
        let mut count = 0usize;
        let stats = enumerate_runs_with(&cfg, depth, EnumCaps::default(), |_| count += 1).unwrap();
        println!(
            "depth {depth}: traces={} dup={} nodes={} in {:?}",
            stats.traces, stats.duplicates, stats.nodes, t0.elapsed()
        );
    }
}
