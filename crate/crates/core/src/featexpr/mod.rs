//! Feature expressions, canonical presence conditions, configurations and
//! feature models.

mod expr;
mod model;
mod render;
mod store;

use thiserror::Error;

pub use expr::{parse_feature_expr, DisplayExpr, Feature, FeatureExpr, FeatureId, FeatureOrigin, FeatureRegistry};
pub use model::{
    abstract_comparison, comparison_feature_name, enum_group_constraints, evaluate, CompareOp, Configuration,
    FeatureModel,
};
pub use store::{count_unique_pcs, Pc, PcStore};

#[derive(Debug, Error)]
pub enum FeatureExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown feature `{name}` at offset {offset}")]
    UnknownFeature { name: String, offset: usize },
    #[error("feature model line {line}: {source}")]
    InModel {
        line: usize,
        #[source]
        source: Box<FeatureExprError>,
    },
    #[error("feature model is unsatisfiable")]
    UnsatisfiableModel,
}

impl FeatureExprError {
    /// Byte offset into the parsed text, when the error has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            FeatureExprError::Syntax { offset, .. } | FeatureExprError::UnknownFeature { offset, .. } => Some(*offset),
            FeatureExprError::InModel { source, .. } => source.offset(),
            FeatureExprError::UnsatisfiableModel => None,
        }
    }
}
