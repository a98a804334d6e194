use std::path::PathBuf;
use std::time::Instant;

use splift::analysis::{analyze_graph, behaviour_alteration_program, export_graph_json, GraphDocument};
use splift::engine::{verify_lifting, EvalOptions};
use splift::extractor::{extract_dir, ExtractionConfig};
use splift::featexpr::PcStore;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/globvar")
}

#[test]
fn beh_alter_between_c1_and_c2() {
    let start = Instant::now();
    let cfg = ExtractionConfig::parse(&std::fs::read_to_string(fixture().join("extract.cfg")).unwrap()).unwrap();
    let mut store = PcStore::new();
    let ex = extract_dir(&fixture(), &cfg, &mut store).unwrap();
    let bundle = behaviour_alteration_program();
    let opts = EvalOptions {
        collect_stats: true,
        ..Default::default()
    };
    let run = analyze_graph(&ex.graph, &bundle.program, &mut store, &opts).unwrap();

    let expected = store.parse("FA & !FB").unwrap();
    let beh = run.results.relation("behAlter").unwrap();
    assert_eq!(beh.len(), 1);
    assert_eq!(
        run.results.get("behAlter", &["c1.cpp#A#updateX", "c2.c#foo"]),
        Some(expected)
    );
    assert_eq!(run.stats.unsat_dropped, 0);

    let report = verify_lifting(&bundle.program, &run.facts, &mut store).unwrap();
    assert_eq!(report.configurations, 4);
    assert!(report.passed(), "{:?}", report.counterexamples);

    let doc: GraphDocument = serde_json::from_str(&export_graph_json(&run.graph, &store)).unwrap();
    assert_eq!(doc.nodes, ["C1", "C2"]);
    assert_eq!(doc.edges.len(), 1);
    assert_eq!(doc.edges[0].id, "C1→C2");
    assert_eq!(doc.edges[0].pc, "FA & !FB");
    assert_eq!(doc.edges[0].witnesses.len(), 1);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}
