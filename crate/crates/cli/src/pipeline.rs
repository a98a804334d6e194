use std::fmt;
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use splift::analysis::{behaviour_alteration_program, component_graph_of, export_graph_json};
use splift::datalog::{load_facts, parse_program, write_relation, AnnotatedDatabase, LoadReport, Program};
use splift::engine::{evaluate_lifted, EvalOptions, RunStats};
use splift::extractor::{extract_dir, ExtractionConfig};
use splift::featexpr::{FeatureModel, PcStore};
use splift::tamodel::{emit_ta, parse_ta, ta2tsv, write_tables};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Extract,
    Ta2tsv,
    Solve,
    Filter,
    Export,
    Bench,
    Serve,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Extract => "extract",
            Stage::Ta2tsv => "ta2tsv",
            Stage::Solve => "solve",
            Stage::Filter => "filter",
            Stage::Export => "export",
            Stage::Bench => "bench",
            Stage::Serve => "serve",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl StageError {
    pub fn new(stage: Stage, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        StageError {
            stage,
            source: source.into(),
        }
    }
}

trait InStage<T> {
    fn stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<Box<dyn std::error::Error + Send + Sync>>> InStage<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError::new(stage, e))
    }
}

fn read(path: &Path, stage: Stage) -> Result<String, StageError> {
    std::fs::read_to_string(path).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str, stage: Stage) -> Result<(), StageError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| StageError::new(stage, format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| StageError::new(stage, format!("{}: {e}", path.display())))
}

/// Extracts `src` with the given config and writes the TA model to `out`.
pub fn cmd_extract(src: &Path, config: &Path, out: &Path) -> Result<(), StageError> {
    let cfg = ExtractionConfig::parse(&read(config, Stage::Extract)?).stage(Stage::Extract)?;
    let mut store = PcStore::new();
    let ex = extract_dir(src, &cfg, &mut store).stage(Stage::Extract)?;
    info!(
        "extracted {} nodes and {} edges from {}",
        ex.graph.node_count(),
        ex.graph.edge_count(),
        src.display()
    );
    write(out, &emit_ta(&ex.graph).stage(Stage::Extract)?, Stage::Extract)
}

/// Converts a TA model into one fact file per relation under `outdir`.
pub fn cmd_ta2tsv(model: &Path, outdir: &Path) -> Result<(), StageError> {
    let doc = parse_ta(&read(model, Stage::Ta2tsv)?).stage(Stage::Ta2tsv)?;
    let tables = ta2tsv(&doc).stage(Stage::Ta2tsv)?;
    write_tables(&tables, outdir).stage(Stage::Ta2tsv)
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Datalog program; the behaviour-alteration bundle when absent.
    pub rules: Option<PathBuf>,
    pub feature_model: Option<PathBuf>,
    pub prune_during_eval: bool,
    /// Write `stats.txt` next to the results.
    pub stats: bool,
    /// Also write `stats.json`.
    pub json: bool,
}

/// Everything `solve` computed, for callers that keep going.
pub struct Solved {
    pub program: Program,
    pub store: PcStore,
    pub facts: AnnotatedDatabase,
    pub load: LoadReport,
    pub results: AnnotatedDatabase,
    pub stats: RunStats,
}

fn program_of(opts: &SolveOptions) -> Result<Program, StageError> {
    match &opts.rules {
        None => Ok(behaviour_alteration_program().program),
        Some(path) => parse_program(&read(path, Stage::Solve)?)
            .map_err(|e| StageError::new(Stage::Solve, format!("{}: {e}", path.display()))),
    }
}

/// Evaluates the program over `facts_dir` and writes each output relation
/// to `outdir/<relation>.facts` with a PC column.
pub fn cmd_solve(facts_dir: &Path, outdir: &Path, opts: &SolveOptions) -> Result<Solved, StageError> {
    let program = program_of(opts)?;
    let mut store = PcStore::new();
    let (facts, load) = load_facts(facts_dir, &program, &mut store).stage(Stage::Solve)?;
    let feature_model = match &opts.feature_model {
        None => None,
        Some(path) => Some(
            FeatureModel::parse(&read(path, Stage::Filter)?, &mut store)
                .map_err(|e| StageError::new(Stage::Filter, format!("{}: {e}", path.display())))?,
        ),
    };
    let eval = EvalOptions {
        feature_model,
        collect_stats: true,
        prune_with_fm_during_eval: opts.prune_during_eval,
    };
    let (results, stats) = evaluate_lifted(&program, &facts, &mut store, &eval).stage(Stage::Solve)?;
    for d in program.outputs() {
        let path = outdir.join(format!("{}.facts", d.name));
        write(&path, &write_relation(&results, &d.name, &store), Stage::Solve)?;
    }
    if opts.stats {
        write(&outdir.join("stats.txt"), &stats.to_text(), Stage::Solve)?;
    }
    if opts.json {
        write(&outdir.join("stats.json"), &stats.to_json(), Stage::Solve)?;
    }
    info!(
        "{} output facts, {} unsat dropped, {} removed by the feature model",
        stats.output_facts, stats.unsat_dropped, stats.fm_removed
    );
    Ok(Solved {
        program,
        store,
        facts,
        load,
        results,
        stats,
    })
}

/// Runs every stage: `outdir/model.ta`, `outdir/facts/`, `outdir/results/`
/// and `outdir/graph.json`.
pub fn cmd_analyze(src: &Path, config: &Path, outdir: &Path, opts: &SolveOptions) -> Result<Solved, StageError> {
    let model = outdir.join("model.ta");
    let facts = outdir.join("facts");
    cmd_extract(src, config, &model)?;
    cmd_ta2tsv(&model, &facts)?;
    let mut solved = cmd_solve(&facts, &outdir.join("results"), opts)?;
    let graph = component_graph_of(&solved.results, &mut solved.store).stage(Stage::Export)?;
    write(
        &outdir.join("graph.json"),
        &export_graph_json(&graph, &solved.store),
        Stage::Export,
    )?;
    Ok(solved)
}
