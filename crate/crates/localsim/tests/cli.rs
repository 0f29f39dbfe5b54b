use std::path::Path;
use std::process::{Command, Output};

use localsim::bench::read_csv;
use localsim::formats::RunDoc;
use localsim::io::read_graph;

fn localsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localsim")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn gen_cycle_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = localsim(dir.path(), &["gen", "cycle", "--n", "100", "-o", "c.txt"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("c.txt")).unwrap();
    let g = read_graph(&text).unwrap();
    assert_eq!(g.m(), 100);
    assert_eq!(localsim::io::write_graph(&g), text);
}

#[test]
fn random_regular_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = localsim(dir.path(), &["--seed", "9", "gen", "random_regular", "--n", "50", "--delta", "4"]);
    assert_eq!(code(&o), 0);
    let g = read_graph(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert!((0..g.n()).all(|u| g.degree(u) == 4));
}

#[test]
fn run_linial_is_valid_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    localsim(dir.path(), &["gen", "cycle", "--n", "64", "-o", "c.txt"]);
    let a = localsim(dir.path(), &["--seed", "3", "run", "linial", "c.txt"]);
    let b = localsim(dir.path(), &["--seed", "3", "run", "linial", "c.txt"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let doc: RunDoc = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc.valid, Some(true));
    assert_eq!(doc.labels.len(), 64);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    localsim(dir.path(), &["gen", "cycle", "--n", "30", "-o", "c.txt"]);
    assert_eq!(code(&localsim(dir.path(), &["run", "no_such_alg", "c.txt"])), 2);
    assert_eq!(code(&localsim(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&localsim(dir.path(), &["run", "linial", "missing.txt"])), 2);

    // a wrong colouring is an invalid result
    let labels: Vec<u32> = vec![1; 30];
    std::fs::write(dir.path().join("bad.json"), serde_json::to_string(&labels).unwrap()).unwrap();
    assert_eq!(code(&localsim(dir.path(), &["check", "coloring:3", "c.txt", "bad.json"])), 1);
    assert_eq!(code(&localsim(dir.path(), &["--allow-invalid", "check", "coloring:3", "c.txt", "bad.json"])), 0);

    localsim(dir.path(), &["run", "cycle3color", "c.txt", "-o", "r.json"]);
    assert_eq!(code(&localsim(dir.path(), &["check", "coloring:3", "c.txt", "r.json"])), 0);
}

#[test]
fn check_mis_and_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    localsim(dir.path(), &["--seed", "2", "gen", "random_regular", "--n", "40", "--delta", "3", "-o", "g.txt"]);
    assert_eq!(code(&localsim(dir.path(), &["run", "luby", "g.txt", "-o", "m.json"])), 0);
    assert_eq!(code(&localsim(dir.path(), &["check", "mis", "g.txt", "m.json"])), 0);
    for m in ["ballcarve", "distdecomp", "mpx"] {
        assert_eq!(code(&localsim(dir.path(), &["decompose", m, "g.txt", "-o", "d.json"])), 0, "{m}");
        assert_eq!(code(&localsim(dir.path(), &["check", "decomposition", "g.txt", "d.json"])), 0, "{m}");
    }
}

#[test]
fn lll_and_sinkless() {
    let dir = tempfile::tempdir().unwrap();
    localsim(dir.path(), &["gen", "random_regular", "--n", "30", "--delta", "3", "-o", "g.txt"]);
    let o = localsim(dir.path(), &["run", "lll:fg", "g.txt", "-o", "s.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&localsim(dir.path(), &["check", "sinkless:3", "g.txt", "s.json"])), 0);

    let inst = r#"{"variables":[{"bits":1},{"bits":1}],"events":[{"vars":[0,1],"violating":[0,3]}]}"#;
    std::fs::write(dir.path().join("i.json"), inst).unwrap();
    for m in ["mt", "fg"] {
        let o = localsim(dir.path(), &["lll", "i.json", "--method", m]);
        assert_eq!(code(&o), 0, "{m}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["violated"], 0);
    }
}

#[test]
fn roundelim_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&localsim(dir.path(), &["roundelim", "search", "--t", "1", "--ids", "6", "-o", "t.json"])), 0);
    assert_eq!(code(&localsim(dir.path(), &["roundelim", "verify", "t.json"])), 0);
    let o = localsim(dir.path(), &["roundelim", "eliminate", "t.json", "--times", "2", "-o", "e.json"]);
    assert_eq!(code(&o), 0);
    let e: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(e["k"], 256);
    assert_eq!(e["kind"], "node");
    assert_eq!(code(&localsim(dir.path(), &["roundelim", "analyze", "e.json"])), 0);
    assert_eq!(code(&localsim(dir.path(), &["roundelim", "verify"])), 2);
}

#[test]
fn bench_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"algorithm":"linial","family":"cycle","delta":2,"sizes":[16,256,4096],"trials":3,"seed":1,"timing":false}"#;
    std::fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let run = || {
        let o = Command::new(env!("CARGO_BIN_EXE_localsim"))
            .current_dir(dir.path())
            .env("LOCALSIM_THREADS", "2")
            .args(["bench", "cfg.json"])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        o.stdout
    };
    let a = run();
    assert_eq!(a, run());
    let rows = read_csv(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.valid == Some(true)));
    let med = localsim::bench::median_rounds(&rows);
    assert!(med.windows(2).all(|w| w[0].1 <= w[1].1), "{med:?}");
}
