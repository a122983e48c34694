//! End-to-end CLI behavior: exit codes, trace files, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn asmrpc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asmrpc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

#[test]
fn run_writes_trace_and_passes_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmrpc(
        dir.path(),
        &["run", "--scenario", "problem1", "--seed", "7", "--out", "p1.trace"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("memory-exact: PASS"), "{stdout}");
    assert!(dir.path().join("p1.trace").exists());

    let check = asmrpc(
        dir.path(),
        &["check", "--scenario", "problem1", "--trace", "p1.trace"],
    );
    assert_eq!(code(&check), 0);
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.trace", "b.trace"] {
        let out = asmrpc(
            dir.path(),
            &["run", "--scenario", "problem3", "--seed", "42", "--out", name],
        );
        assert_eq!(code(&out), 0);
    }
    let a = std::fs::read(dir.path().join("a.trace")).unwrap();
    let b = std::fs::read(dir.path().join("b.trace")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.scn"), "kind = memory\nbogus = 1\n").unwrap();
    let out = asmrpc(dir.path(), &["run", "--scenario", "bad.scn"]);
    assert_eq!(code(&out), 2);
    let out = asmrpc(dir.path(), &["run", "--scenario", "missing.scn"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn clash_aborts_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("clash.scn"),
        "kind = custom\ncomponent.clasher = 1\nbudget = 5\nprogram = module clasher\\nx := 1\\nx := 2\\nendmodule\n",
    )
    .unwrap();
    let out = asmrpc(dir.path(), &["run", "--scenario", "clash.scn"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn tampered_trace_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmrpc(
        dir.path(),
        &["run", "--scenario", "problem1", "--seed", "3", "--out", "t.trace"],
    );
    assert_eq!(code(&out), 0);
    // Strip the RETURN moves: every operation is now open.
    let text = std::fs::read_to_string(dir.path().join("t.trace")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.retain(|l| !l.contains("CallReply(@caller"));
    std::fs::write(dir.path().join("t.trace"), lines.join("\n") + "\n").unwrap();
    let out = asmrpc(
        dir.path(),
        &[
            "check",
            "--scenario",
            "problem1",
            "--trace",
            "t.trace",
            "--checks",
            "liveness",
        ],
    );
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("t.cex.trace").exists(), "counterexample file");
}

#[test]
fn unknown_check_name_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmrpc(
        dir.path(),
        &["run", "--scenario", "problem1", "--checks", "nope"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn enumerate_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmrpc(
        dir.path(),
        &["enumerate", "--scenario", "enum-tiny", "--depth", "6"],
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("enumerated 444 traces"), "{stdout}");

    let capped = asmrpc(
        dir.path(),
        &[
            "enumerate",
            "--scenario",
            "enum-tiny",
            "--depth",
            "6",
            "--max-traces",
            "10",
        ],
    );
    assert_eq!(code(&capped), 2, "explosion guard is a config error");
}

#[test]
fn parse_round_trips_a_program() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("demo.asm"),
        "const tick\nmodule demo\nif x = undef then x := tick endif\nendmodule\n",
    )
    .unwrap();
    let out = asmrpc(dir.path(), &["parse", "demo.asm"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("module demo"));

    std::fs::write(dir.path().join("broken.asm"), "module m\nif ( then x := 1 endif\nendmodule\n")
        .unwrap();
    let out = asmrpc(dir.path(), &["parse", "broken.asm"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn trace_dir_env_var_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_asmrpc"))
        .current_dir(dir.path())
        .env("ASMRPC_TRACE_DIR", dir.path())
        .args(["run", "--scenario", "problem2", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("problem2-run-1.trace").exists());
}
