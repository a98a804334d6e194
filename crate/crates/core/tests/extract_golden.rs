use std::path::PathBuf;

use splift::extractor::{extract_dir, Extraction, ExtractionConfig};
use splift::factgraph::{edge_type, Edge, NodeKind};
use splift::featexpr::{Pc, PcStore};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/globvar")
}

fn run() -> (Extraction, PcStore) {
    let cfg = ExtractionConfig::parse(&std::fs::read_to_string(fixture().join("extract.cfg")).unwrap()).unwrap();
    let mut store = PcStore::new();
    let ex = extract_dir(&fixture(), &cfg, &mut store).unwrap();
    (ex, store)
}

fn line_pcs(ex: &Extraction, file: &str, line: u32) -> Vec<(Edge, Pc)> {
    ex.occurrences_at(file, line).map(|o| (o.edge.clone(), o.pc)).collect()
}

#[test]
fn line_pcs_match_the_listing() {
    let (ex, mut store) = run();
    let fa = store.parse("FA").unwrap();
    let fa_fb = store.parse("FA & FB").unwrap();
    let fa_nfb = store.parse("FA & !FB").unwrap();

    let l10 = line_pcs(&ex, "c1.cpp", 10);
    assert!(l10.contains(&(Edge::new(edge_type::VAR_WRITE, "c2.c#GlobVar", "c1.cpp#A#x"), fa)));
    assert!(l10.iter().all(|(_, pc)| *pc == fa));

    let l13 = line_pcs(&ex, "c1.cpp", 13);
    assert!(!l13.is_empty());
    assert!(l13.iter().all(|(_, pc)| *pc == fa_fb));

    let l15 = line_pcs(&ex, "c1.cpp", 15);
    assert!(l15.contains(&(Edge::new(edge_type::WRITE, "c1.cpp#A#updateX", "c2.c#GlobVar"), fa_nfb)));
    assert!(l15.contains(&(Edge::new(edge_type::VAR_WRITE, "c2.c#GlobVar", "c2.c#GlobVar"), fa_nfb)));
    assert!(l15.iter().all(|(_, pc)| *pc == fa_nfb));

    let l13b = line_pcs(&ex, "c2.c", 13);
    assert!(l13b.contains(&(Edge::new(edge_type::VAR_INF_FUNC, "c2.c#GlobVar", "c2.c#foo"), Pc::TRUE)));
}

#[test]
fn graph_shape() {
    let (ex, _) = run();
    let g = &ex.graph;
    assert_eq!(g.node_kind("C1"), Some(NodeKind::Component));
    assert_eq!(g.node_kind("c1.cpp#A"), Some(NodeKind::Class));
    assert_eq!(g.node_kind("c1.cpp#A#updateX"), Some(NodeKind::Function));
    assert_eq!(g.node_kind("c2.c#GlobVar"), Some(NodeKind::Variable));
    // feature variables are not program entities
    assert!(g.nodes().all(|(id, _)| !id.ends_with("#FA") && !id.ends_with("#FB")));
    assert!(g.contains_edge(&Edge::new(edge_type::C_FUNCTION, "c1.cpp#A#updateX", "C1")));
    assert!(g.contains_edge(&Edge::new(edge_type::C_FUNCTION, "c2.c#foo", "C2")));
    assert!(g.contains_edge(&Edge::new(edge_type::CALL, "c2.c#bar", "c2.c#foo")));
    let w = Edge::new(edge_type::WRITE, "c1.cpp#A#updateX", "c2.c#GlobVar");
    assert_eq!(g.edge_pc(&w), Some("FA & !FB"));
    // x is written on both branches of FB
    let wx = Edge::new(edge_type::WRITE, "c1.cpp#A#updateX", "c1.cpp#A#x");
    assert_eq!(g.edge_pc(&wx), Some("FA"));
}
