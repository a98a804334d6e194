//! The hierarchical program model produced by extraction: typed entity
//! nodes, typed relation edges and key/value attributes on both.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Attribute key carrying a presence condition in the feature-expression grammar.
pub const PC_KEY: &str = "PC";

pub mod edge_type {
    pub const CONTAIN: &str = "contain";
    pub const WRITE: &str = "write";
    pub const VAR_WRITE: &str = "varWrite";
    pub const CALL: &str = "call";
    pub const VAR_INF_FUNC: &str = "varInfFunc";
    pub const C_FUNCTION: &str = "cFunction";

    /// Every relation the extractor can emit.
    pub const ALL: [&str; 6] = [CONTAIN, WRITE, VAR_WRITE, CALL, VAR_INF_FUNC, C_FUNCTION];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Component,
    File,
    Class,
    Function,
    Variable,
}

impl NodeKind {
    pub const ALL: [NodeKind; 5] = [
        NodeKind::Component,
        NodeKind::File,
        NodeKind::Class,
        NodeKind::Function,
        NodeKind::Variable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Component => "COMPONENT",
            NodeKind::File => "FILE",
            NodeKind::Class => "CLASS",
            NodeKind::Function => "FUNCTION",
            NodeKind::Variable => "VARIABLE",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GraphError::UnknownNodeKind(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub etype: String,
    pub src: String,
    pub dst: String,
}

impl Edge {
    pub fn new(etype: impl Into<String>, src: impl Into<String>, dst: impl Into<String>) -> Self {
        Edge {
            etype: etype.into(),
            src: src.into(),
            dst: dst.into(),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.etype, self.src, self.dst)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node type `{0}`")]
    UnknownNodeKind(String),
    #[error("node `{id}` redeclared as {new} (was {old})")]
    KindConflict { id: String, old: NodeKind, new: NodeKind },
    #[error("edge `{edge}` references undeclared node `{missing}`")]
    DanglingEdge { edge: String, missing: String },
    #[error("attribute on undeclared node `{0}`")]
    DanglingNodeAttribute(String),
    #[error("attribute on undeclared edge `{0}`")]
    DanglingEdgeAttribute(String),
    #[error("attribute `{key}` set twice on `{subject}`")]
    DuplicateAttribute { subject: String, key: String },
}

/// Sorted maps and sets throughout, so iteration order is the canonical
/// output order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactGraph {
    nodes: BTreeMap<String, NodeKind>,
    edges: BTreeSet<Edge>,
    node_attrs: BTreeMap<String, BTreeMap<String, String>>,
    edge_attrs: BTreeMap<Edge, BTreeMap<String, String>>,
}

impl FactGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adding an existing node with the same kind is a no-op.
    pub fn add_node(&mut self, id: impl Into<String>, kind: NodeKind) -> Result<(), GraphError> {
        let id = id.into();
        match self.nodes.get(&id) {
            Some(&old) if old != kind => Err(GraphError::KindConflict { id, old, new: kind }),
            Some(_) => Ok(()),
            None => {
                self.nodes.insert(id, kind);
                Ok(())
            }
        }
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        for end in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(end) {
                return Err(GraphError::DanglingEdge {
                    edge: edge.to_string(),
                    missing: end.clone(),
                });
            }
        }
        self.edges.insert(edge);
        Ok(())
    }

    pub fn set_node_attr(&mut self, id: &str, key: &str, value: impl Into<String>) -> Result<(), GraphError> {
        if !self.nodes.contains_key(id) {
            return Err(GraphError::DanglingNodeAttribute(id.to_string()));
        }
        self.node_attrs
            .entry(id.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn set_edge_attr(&mut self, edge: &Edge, key: &str, value: impl Into<String>) -> Result<(), GraphError> {
        if !self.edges.contains(edge) {
            return Err(GraphError::DanglingEdgeAttribute(edge.to_string()));
        }
        self.edge_attrs
            .entry(edge.clone())
            .or_default()
            .insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, NodeKind)> {
        self.nodes.iter().map(|(id, k)| (id.as_str(), *k))
    }

    pub fn node_kind(&self, id: &str) -> Option<NodeKind> {
        self.nodes.get(id).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edges_of_type<'a>(&'a self, etype: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.etype == etype)
    }

    pub fn contains_edge(&self, edge: &Edge) -> bool {
        self.edges.contains(edge)
    }

    pub fn node_attrs(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, String>)> {
        self.node_attrs.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn edge_attrs(&self) -> impl Iterator<Item = (&Edge, &BTreeMap<String, String>)> {
        self.edge_attrs.iter()
    }

    pub fn node_pc(&self, id: &str) -> Option<&str> {
        self.node_attrs.get(id).and_then(|a| a.get(PC_KEY)).map(String::as_str)
    }

    pub fn edge_pc(&self, edge: &Edge) -> Option<&str> {
        self.edge_attrs
            .get(edge)
            .and_then(|a| a.get(PC_KEY))
            .map(String::as_str)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }
}
