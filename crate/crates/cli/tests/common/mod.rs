#![allow(dead_code)]

use std::path::PathBuf;

use splift::analysis::{analyze_graph, behaviour_alteration_program, export_graph_json};
use splift::engine::EvalOptions;
use splift::featexpr::PcStore;
use splift::synth::ten_component_graph;

pub fn globvar_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/globvar")
}

/// graph.json of the ten-component example.
pub fn ten_component_document() -> String {
    let mut store = PcStore::new();
    let g = ten_component_graph(&mut store);
    let bundle = behaviour_alteration_program();
    let run = analyze_graph(&g, &bundle.program, &mut store, &EvalOptions::default()).unwrap();
    export_graph_json(&run.graph, &store)
}
