//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

use predfuzz::cli::exit;
use predfuzz::cli::stats::read_events;
use predfuzz::cli::summary::Summary;

fn predfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_predfuzz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_stats_and_witnesses_that_replay() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.jsonl");
    let wdir = dir.path().join("witnesses");
    let o = predfuzz(&[
        "run",
        "builtin:foo",
        "--config",
        "B",
        "--seed",
        "7",
        "--max-execs",
        "200000",
        "--logical-clock",
        "--stats-out",
        stats.to_str().unwrap(),
        "--witness-dir",
        wdir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);

    // the printed summary is a function of the stream alone
    let events = read_events(std::io::BufReader::new(std::fs::File::open(&stats).unwrap())).unwrap();
    let summary = Summary::from_events(&events);
    assert!(out.starts_with(&summary.to_string()), "{out}");
    assert_eq!(summary.bugs.len(), 1);
    assert!(summary.bugs[0].witness_len >= 3);

    let witness = wdir.join("swc-110-14-7.json");
    let o = predfuzz(&["replay", witness.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("reproduced: SWC-110 at 14:7"));

    let mut w: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&witness).unwrap()).unwrap();
    for tx in w["sequence"].as_array_mut().unwrap() {
        if tx["function"] == "SetY" {
            tx["args"] = serde_json::json!([41]);
        }
    }
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, w.to_string()).unwrap();
    let o = predfuzz(&["replay", tampered.to_str().unwrap()]);
    assert_eq!(code(&o), i32::from(exit::NOT_REPRODUCED), "{}", stdout(&o));

    w["version"] = serde_json::json!("0.0.0");
    std::fs::write(&tampered, w.to_string()).unwrap();
    assert_eq!(
        code(&predfuzz(&["replay", tampered.to_str().unwrap()])),
        i32::from(exit::VERSION)
    );
}

#[test]
fn same_seed_gives_a_byte_identical_stream() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = predfuzz(&[
            "run",
            "builtin:baz",
            "--seed",
            "11",
            "--max-execs",
            "5000",
            "--logical-clock",
            "--stats-out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.jsonl"), run("b.jsonl"));
}

#[test]
fn baz_under_a_misses_one_path() {
    let o = predfuzz(&[
        "run",
        "builtin:baz",
        "--config",
        "A",
        "--max-execs",
        "100000",
        "--no-literal-harvest",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("paths:         4\n"), "{out}");
    assert!(out.contains("bugs:          0\n"), "{out}");
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, src: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, src).unwrap();
        p
    };
    let bad = write("bad.mvc", "contract X { fn f( }");
    assert_eq!(code(&predfuzz(&["run", bad.to_str().unwrap()])), i32::from(exit::PARSE));
    let undeployable = write(
        "undeployable.mvc",
        "contract X { var a; fn init() { require(a == 1); } fn f() { return 0; } }",
    );
    assert_eq!(
        code(&predfuzz(&["run", undeployable.to_str().unwrap()])),
        i32::from(exit::DEPLOY)
    );
    assert_eq!(code(&predfuzz(&["run", "/no/such/file.mvc"])), i32::from(exit::IO));
    assert_eq!(
        code(&predfuzz(&["run", "builtin:baz", "--config", "Z"])),
        i32::from(exit::USAGE)
    );
    assert!(!Path::new("/no/such/file.mvc").exists());
}

#[test]
fn sweep_and_corpus_commands() {
    let o = predfuzz(&[
        "sweep",
        "builtin:baz",
        "--runs",
        "3",
        "--max-execs",
        "3000",
        "--threads",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("seed")).count(), 3, "{out}");
    assert!(out.contains("median paths:"));

    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("corpus.json");
    let o = predfuzz(&[
        "corpus",
        "builtin:foo",
        "--max-execs",
        "2000",
        "--export",
        export.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&export).unwrap()).unwrap();
    assert!(v.as_array().unwrap().len() >= 4);
    let o = predfuzz(&["corpus", "builtin:foo", "--max-execs", "2000"]);
    assert!(stdout(&o).contains("Bar()@0"));
}
