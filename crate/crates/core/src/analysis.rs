//! Behaviour-alteration bundle and aggregation of its results into a
//! component-interaction graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datalog::{load_fact_tables, parse_program, AnnotatedDatabase, DatalogError, LoadReport, Program};
use crate::engine::{evaluate_lifted, EngineError, EvalOptions, RunStats};
use crate::factgraph::{edge_type, FactGraph};
use crate::featexpr::{Pc, PcStore};
use crate::tamodel::{ta2tsv, TaDocument, TaError};

/// Transitive data flow from a write in one component to a variable that
/// decides a call into another component.
pub const BEHAVIOUR_ALTERATION: &str = r#".decl write(f: symbol, v: symbol)
.decl varWrite(v0: symbol, v1: symbol)
.decl varInfFunc(v: symbol, f: symbol)
.decl cFunction(f: symbol, c: symbol)
.decl transVarWrite(v0: symbol, v1: symbol)
.decl behAlter(f0: symbol, f1: symbol)
.input write, varWrite, varInfFunc, cFunction
.output transVarWrite, behAlter

transVarWrite(v0, v1) :- varWrite(v0, v1).
transVarWrite(v0, v2) :- varWrite(v0, v1),
                         transVarWrite(v1, v2).

behAlter(f0, f1) :- write(f0, v0),
                    transVarWrite(v0, v1),
                    varInfFunc(v1, f1),
                    cFunction(f0, c0),
                    cFunction(f1, c1),
                    c0 != c1.
"#;

pub const BEH_ALTER: &str = "behAlter";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("function `{0}` belongs to no component")]
    NoComponent(String),
    #[error("function `{function}` belongs to several components: {}", components.join(", "))]
    MultipleComponents { function: String, components: Vec<String> },
    #[error("relation `{0}` is missing")]
    MissingRelation(String),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error(transparent)]
    Ta(#[from] TaError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug)]
pub struct AnalysisBundle {
    pub text: &'static str,
    pub program: Program,
}

impl AnalysisBundle {
    /// Names of the relations that must be supplied as fact files.
    pub fn inputs(&self) -> Vec<&str> {
        self.program.inputs().map(|d| d.name.as_str()).collect()
    }
}

pub fn behaviour_alteration_program() -> AnalysisBundle {
    AnalysisBundle {
        text: BEHAVIOUR_ALTERATION,
        program: parse_program(BEHAVIOUR_ALTERATION).expect("bundled program parses"),
    }
}

/// Turns a fact graph into the input database of `program`, going through
/// the same tables `ta2tsv` writes.
pub fn graph_facts(
    g: &FactGraph,
    program: &Program,
    store: &mut PcStore,
) -> Result<(AnnotatedDatabase, LoadReport), AnalysisError> {
    let tables = ta2tsv(&TaDocument::from_graph(g))?;
    Ok(load_fact_tables(&tables, program, store)?)
}

/// Rows of a binary-or-wider relation as strings with their PCs.
pub type Rows = Vec<(Vec<String>, Pc)>;

pub fn relation_rows(db: &AnnotatedDatabase, relation: &str) -> Result<Rows, AnalysisError> {
    let rel = db
        .relation(relation)
        .ok_or_else(|| AnalysisError::MissingRelation(relation.to_string()))?;
    Ok(rel.tuples.iter().map(|(t, pc)| (db.strings(t), *pc)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub from: String,
    pub to: String,
    pub pc: Pc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentEdge {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub pc: Pc,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComponentGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<ComponentEdge>,
    pub features: Vec<String>,
}

pub fn edge_id(src: &str, dst: &str) -> String {
    format!("{src}→{dst}")
}

/// Groups `behAlter` rows by the components of their two functions.
pub fn build_component_graph(
    beh_alter: &[(Vec<String>, Pc)],
    c_function: &[(Vec<String>, Pc)],
    store: &mut PcStore,
) -> Result<ComponentGraph, AnalysisError> {
    let mut owners: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (row, _) in c_function {
        owners.entry(&row[0]).or_default().insert(&row[1]);
    }
    let component = |f: &str| -> Result<String, AnalysisError> {
        match owners.get(f) {
            None => Err(AnalysisError::NoComponent(f.to_string())),
            Some(cs) if cs.len() > 1 => Err(AnalysisError::MultipleComponents {
                function: f.to_string(),
                components: cs.iter().map(|c| c.to_string()).collect(),
            }),
            Some(cs) => Ok(cs.iter().next().unwrap().to_string()),
        }
    };

    let mut grouped: BTreeMap<(String, String), Vec<Witness>> = BTreeMap::new();
    for (row, pc) in beh_alter {
        let (from, to) = (&row[0], &row[1]);
        let (c0, c1) = (component(from)?, component(to)?);
        if c0 == c1 || pc.is_false() {
            continue;
        }
        grouped.entry((c0, c1)).or_default().push(Witness {
            from: from.clone(),
            to: to.clone(),
            pc: *pc,
        });
    }
    let edges = grouped
        .into_iter()
        .map(|((src, dst), mut witnesses)| {
            witnesses.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
            let pc = store.or_all(witnesses.iter().map(|w| w.pc));
            ComponentEdge {
                id: edge_id(&src, &dst),
                src,
                dst,
                pc,
                witnesses,
            }
        })
        .collect();
    let nodes = c_function
        .iter()
        .map(|(row, _)| row[1].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut features: Vec<String> = store.features().names().map(String::from).collect();
    features.sort();
    Ok(ComponentGraph { nodes, edges, features })
}

/// Builds the graph straight from an evaluated database.
pub fn component_graph_of(db: &AnnotatedDatabase, store: &mut PcStore) -> Result<ComponentGraph, AnalysisError> {
    let beh = relation_rows(db, BEH_ALTER)?;
    let cf = relation_rows(db, edge_type::C_FUNCTION)?;
    build_component_graph(&beh, &cf, store)
}

/// Everything one in-process analysis run produces.
#[derive(Clone, Debug)]
pub struct AnalysisRun {
    pub facts: AnnotatedDatabase,
    pub load: LoadReport,
    pub results: AnnotatedDatabase,
    pub stats: RunStats,
    pub graph: ComponentGraph,
}

/// Facts, lifted evaluation and aggregation for an extracted graph.
pub fn analyze_graph(
    g: &FactGraph,
    program: &Program,
    store: &mut PcStore,
    opts: &EvalOptions,
) -> Result<AnalysisRun, AnalysisError> {
    let (facts, load) = graph_facts(g, program, store)?;
    let (results, stats) = evaluate_lifted(program, &facts, store, opts)?;
    let graph = component_graph_of(&results, store)?;
    Ok(AnalysisRun {
        facts,
        load,
        results,
        stats,
        graph,
    })
}

/// The serialised graph; this is what the server hands out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub features: Vec<String>,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub pc: String,
    pub witnesses: Vec<WitnessDocument>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessDocument {
    pub from: String,
    pub to: String,
    pub pc: String,
}

impl GraphDocument {
    pub fn from_graph(g: &ComponentGraph, store: &PcStore) -> Self {
        GraphDocument {
            features: g.features.clone(),
            nodes: g.nodes.clone(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeDocument {
                    id: e.id.clone(),
                    src: e.src.clone(),
                    dst: e.dst.clone(),
                    pc: store.render(e.pc),
                    witnesses: e
                        .witnesses
                        .iter()
                        .map(|w| WitnessDocument {
                            from: w.from.clone(),
                            to: w.to.clone(),
                            pc: store.render(w.pc),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn export_graph_json(g: &ComponentGraph, store: &PcStore) -> String {
    let mut s = serde_json::to_string_pretty(&GraphDocument::from_graph(g, store)).expect("graph serialises");
    s.push('\n');
    s
}
