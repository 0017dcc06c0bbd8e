use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use routeproj::tsplib;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_routeproj"));
    c.env_remove("LLM_ENDPOINT").env_remove("LLM_MODEL").env_remove("LLM_API_KEY");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

/// `instance -> objective` from a solve report.
fn objectives(report: &Path) -> BTreeMap<String, f64> {
    let mut rd = csv::Reader::from_path(report).unwrap();
    let h = rd.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let (ci, co) = (col("instance"), col("objective"));
    rd.records()
        .map(|r| {
            let r = r.unwrap();
            (r[ci].to_string(), r[co].parse().unwrap())
        })
        .collect()
}

#[test]
fn gen_defaults_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["gen", "tsp", "1000", "uniform", "--seed", "5", "--out", s(&a)]);
    ok(&["gen", "tsp", "1000", "uniform", "--seed", "5", "--out", s(&b)]);
    let fa = files(&a, "tsp");
    assert_eq!(fa.len(), 128);
    for (x, y) in fa.iter().zip(files(&b, "tsp")) {
        assert_eq!(fs::read(x).unwrap(), fs::read(&y).unwrap());
    }

    let c = dir.path().join("c");
    ok(&["gen", "cvrp", "5000", "--count", "2", "--out", s(&c)]);
    let fc = files(&c, "vrp");
    assert_eq!(fc.len(), 2);
    for f in fc {
        let inst = tsplib::read(&f).unwrap();
        assert_eq!(inst.capacity, 300);
        assert_eq!(inst.customers(), 5000);
    }
}

#[test]
fn solve_rrc_and_mvdf_behaviour() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    ok(&["gen", "tsp", "200", "clustered", "--count", "4", "--seed", "9", "--out", s(&inst)]);
    let before: Vec<Vec<u8>> = files(&inst, "tsp").iter().map(|f| fs::read(f).unwrap()).collect();

    let solve = |tag: &str, extra: &[&str]| -> BTreeMap<String, f64> {
        let out = dir.path().join(tag);
        let mut args = vec!["solve", s(&inst), "--reference", "none", "--k", "20", "--out", s(&out)];
        args.extend_from_slice(extra);
        let table = ok(&args);
        assert!(table.contains("mean"), "{table}");
        assert_eq!(files(&out, "sol").len(), 4);
        objectives(&out.join("report.csv"))
    };

    let plain = solve("plain", &["--strategy", "seed"]);
    let with_rrc = solve("rrc", &["--strategy", "seed", "--rrc", "50"]);
    for (name, obj) in &plain {
        assert!(with_rrc[name] <= *obj, "{name}");
    }

    let iso = ["--policy", "isometry-invariant", "--strategy", "identity"];
    let single = solve("iso", &iso);
    let fused = solve("iso-mvdf", &[&iso[..], &["--mvdf"]].concat());
    assert_eq!(single, fused);
    let single_sols: Vec<String> = files(&dir.path().join("iso"), "sol")
        .iter()
        .map(|f| fs::read_to_string(f).unwrap())
        .collect();
    let fused_sols: Vec<String> = files(&dir.path().join("iso-mvdf"), "sol")
        .iter()
        .map(|f| fs::read_to_string(f).unwrap())
        .collect();
    assert_eq!(single_sols, fused_sols);

    let after: Vec<Vec<u8>> = files(&inst, "tsp").iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(before, after, "inputs were modified");
}

#[test]
fn solve_reports_exact_gaps_on_small_instances() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    ok(&["gen", "tsp", "9", "--count", "3", "--out", s(&inst)]);
    let out = dir.path().join("out");
    ok(&["solve", s(&inst), "--reference", "exact", "--out", s(&out)]);
    let mut rd = csv::Reader::from_path(out.join("report.csv")).unwrap();
    let h = rd.headers().unwrap().clone();
    let g = h.iter().position(|c| c == "gap").unwrap();
    for r in rd.records() {
        let gap: f64 = r.unwrap()[g].parse().unwrap();
        assert!(gap >= -1e-9);
    }
}

#[test]
fn evolve_history_and_zero_generations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("evo");
    ok(&[
        "evolve", "--n", "60", "--eval-count", "2", "--population", "4", "--generations", "3", "--k", "10",
        "--seed", "1", "--out", s(&out),
    ]);
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 4);
    let best: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("best_strategy.json")).unwrap()).unwrap();
    assert!(best["source"].is_string());

    let zero = dir.path().join("zero");
    ok(&["evolve", "--n", "40", "--eval-count", "1", "--population", "1", "--generations", "0", "--out", s(&zero)]);
    let best: serde_json::Value = serde_json::from_str(&fs::read_to_string(zero.join("best_strategy.json")).unwrap()).unwrap();
    assert_eq!(best["source"], "window exclude_first; translate min; scale range_max; clip_unit");

    // The evolved file is usable as a solve strategy.
    let inst = dir.path().join("inst");
    ok(&["gen", "tsp", "50", "--count", "1", "--out", s(&inst)]);
    ok(&["solve", s(&inst), "--strategy", s(&out.join("best_strategy.json")), "--reference", "none", "--out", s(&dir.path().join("sol"))]);
}

#[test]
fn oracle_and_bench_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    ok(&["gen", "cvrp", "6", "--count", "2", "--out", s(&inst)]);
    let exact = ok(&["oracle", s(&inst), "--solver", "exact", "--out", s(&dir.path().join("o"))]);
    assert!(!exact.is_empty());
    let bench = dir.path().join("bench");
    ok(&["bench", "--kind", "tsp", "--scales", "80", "--count", "2", "--k", "10", "--rrc", "5", "--out", s(&bench)]);
    assert!(bench.join("bench.csv").exists());
    let table = fs::read_to_string(bench.join("bench.txt")).unwrap();
    assert!(table.contains("identity") && table.contains("seed"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["gen", "tsp", "0", "--out", s(dir.path())]).status.code(), Some(1));
    let inst = dir.path().join("inst");
    ok(&["gen", "tsp", "20", "--count", "1", "--out", s(&inst)]);
    let out = run(&["solve", s(&inst), "--strategy", "no-such-strategy"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-strategy"));
    assert_eq!(run(&["evolve", "--generator", "llm", "--out", s(dir.path())]).status.code(), Some(1));

    let broken = dir.path().join("broken");
    fs::create_dir(&broken).unwrap();
    fs::write(broken.join("x.tsp"), "NAME : x\nTYPE : TSP\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : GEO\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n").unwrap();
    let out = run(&["solve", s(&broken)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("EDGE_WEIGHT_TYPE"));

    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "k = 3\nk = 4\n").unwrap();
    assert_eq!(run(&["--config", s(&cfg), "solve", s(&inst)]).status.code(), Some(1));
}
