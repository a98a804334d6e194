mod common;

use std::collections::BTreeMap;
use std::process::Command;

use serde_json::Value;
use splift::featexpr::PcStore;
use splift_cli::{cmd_analyze, cmd_solve, SolveOptions, Stage};

fn globvar_cfg() -> std::path::PathBuf {
    common::globvar_dir().join("extract.cfg")
}

#[test]
fn analyze_globvar_writes_every_artifact() {
    let out = tempfile::tempdir().unwrap();
    let opts = SolveOptions {
        stats: true,
        json: true,
        ..Default::default()
    };
    cmd_analyze(&common::globvar_dir(), &globvar_cfg(), out.path(), &opts).unwrap();
    for f in [
        "model.ta",
        "facts/varWrite.facts",
        "facts/instance.facts",
        "results/behAlter.facts",
        "results/stats.txt",
        "results/stats.json",
    ] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    let graph: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("graph.json")).unwrap()).unwrap();
    let edges = graph["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 1);
    assert_eq!(edges[0]["id"], "C1→C2");
    assert_eq!(edges[0]["pc"], "FA & !FB");
    let beh = std::fs::read_to_string(out.path().join("results/behAlter.facts")).unwrap();
    assert_eq!(beh, "c1.cpp#A#updateX\tc2.c#foo\tFA & !FB\n");
}

/// Recounts the stats from the written `.facts` files.
#[test]
fn stats_reconcile_with_output_files() {
    let out = tempfile::tempdir().unwrap();
    let opts = SolveOptions {
        stats: true,
        ..Default::default()
    };
    let solved = cmd_analyze(&common::globvar_dir(), &globvar_cfg(), out.path(), &opts).unwrap();
    let mut store = PcStore::new();
    let (mut facts, mut with_pc, mut pcs) = (0, 0, Vec::new());
    for rel in ["transVarWrite", "behAlter"] {
        let text = std::fs::read_to_string(out.path().join(format!("results/{rel}.facts"))).unwrap();
        for line in text.lines() {
            let pc = line.rsplit('\t').next().unwrap();
            facts += 1;
            if !pc.is_empty() {
                with_pc += 1;
                pcs.push(store.parse(pc).unwrap());
            }
        }
    }
    let text = std::fs::read_to_string(out.path().join("results/stats.txt")).unwrap();
    let fields: BTreeMap<&str, &str> = text.lines().filter_map(|l| l.split_once(": ")).collect();
    assert_eq!(fields["output_facts"], facts.to_string());
    assert_eq!(fields["facts_with_pc"], with_pc.to_string());
    assert_eq!(
        fields["unique_pcs"],
        splift::featexpr::count_unique_pcs(pcs).to_string()
    );
    assert_eq!(fields["unsat_dropped"], "0");
    assert_eq!(solved.stats.output_facts, facts);
}

#[test]
fn contradicting_feature_model_removes_the_row() {
    let out = tempfile::tempdir().unwrap();
    cmd_analyze(
        &common::globvar_dir(),
        &globvar_cfg(),
        out.path(),
        &SolveOptions::default(),
    )
    .unwrap();
    let fm = out.path().join("fm.txt");
    std::fs::write(&fm, "# FA requires FB\n!FA | FB\n").unwrap();
    let opts = SolveOptions {
        feature_model: Some(fm),
        stats: true,
        ..Default::default()
    };
    let res = out.path().join("filtered");
    let solved = cmd_solve(&out.path().join("facts"), &res, &opts).unwrap();
    assert_eq!(std::fs::read_to_string(res.join("behAlter.facts")).unwrap(), "");
    // behAlter plus the FA & !FB closure rows through ++GlobVar
    assert!(solved.stats.fm_removed >= 1);
    let stats = std::fs::read_to_string(res.join("stats.txt")).unwrap();
    assert!(stats.contains(&format!("fm_removed: {}", solved.stats.fm_removed)));
}

#[test]
fn failing_stage_is_named() {
    let empty = tempfile::tempdir().unwrap();
    let err = cmd_solve(empty.path(), &empty.path().join("out"), &SolveOptions::default())
        .err()
        .unwrap();
    assert_eq!(err.stage, Stage::Solve);
    assert!(err.to_string().starts_with("solve failed:"), "{err}");
}

#[test]
fn binary_runs_the_pipeline() {
    let out = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_splift");
    let status = Command::new(bin)
        .args(["analyze", "--src"])
        .arg(common::globvar_dir())
        .arg("--config")
        .arg(globvar_cfg())
        .arg("--out")
        .arg(out.path())
        .arg("--stats")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.path().join("graph.json").is_file());

    let o = Command::new(bin)
        .args(["ta2tsv", "--model"])
        .arg(out.path().join("missing.ta"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("ta2tsv failed"));
}
