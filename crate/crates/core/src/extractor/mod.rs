//! Mini-C front end and variability-aware fact extraction.

pub mod ast;
mod check;
mod config;
mod extract;
mod lexer;
mod parser;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use ast::{Pos, TranslationUnit};
pub use config::{ExtractionConfig, FeatureType};
pub use extract::{
    extract, recognize_features, referenced_features, Extraction, FactOccurrence, FeatureSet, FeatureVar,
};

use crate::factgraph::GraphError;
use crate::featexpr::PcStore;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{path}:{pos}: {message}")]
    Syntax { path: String, pos: Pos, message: String },
    #[error("{path}:{pos}: unresolved identifier `{name}`")]
    UnresolvedIdentifier { path: String, pos: Pos, name: String },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parses and name-checks one translation unit.
pub fn parse_mini_c(text: &str, path: &str) -> Result<TranslationUnit, ExtractError> {
    let unit = parser::parse_unit(text, path)?;
    check::check_unit(&unit)?;
    Ok(unit)
}

const SOURCE_EXTENSIONS: &[&str] = &["c", "cc", "cpp", "h", "hpp"];

/// Reads every source file under `dir`, keyed by `/`-separated relative path,
/// sorted by path.
pub fn load_sources(dir: &Path) -> Result<Vec<(String, String)>, ExtractError> {
    let io = |path: &Path, source| ExtractError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            io(&path, e.into())
        })?;
        let path = entry.path();
        let is_source = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e));
        if !entry.file_type().is_file() || !is_source {
            continue;
        }
        let rel = path
            .strip_prefix(dir)
            .unwrap_or(path)
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        out.push((rel, text));
    }
    out.sort();
    Ok(out)
}

/// Parses, recognises features and extracts in one go.
pub fn extract_sources(
    sources: &[(String, String)],
    cfg: &ExtractionConfig,
    store: &mut PcStore,
) -> Result<Extraction, ExtractError> {
    let units = sources
        .iter()
        .map(|(path, text)| parse_mini_c(text, path))
        .collect::<Result<Vec<_>, _>>()?;
    let features = recognize_features(&units, cfg, store.features_mut());
    extract(&units, cfg, &features, store)
}

pub fn extract_dir(dir: &Path, cfg: &ExtractionConfig, store: &mut PcStore) -> Result<Extraction, ExtractError> {
    extract_sources(&load_sources(dir)?, cfg, store)
}
