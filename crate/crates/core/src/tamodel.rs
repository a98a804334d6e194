//! Tuple-Attribute (TA) text format and conversion to tab-separated fact
//! files.
//!
//! ```text
//! $INSTANCE c1.cpp#A#x VARIABLE
//! varWrite c2.c#GlobVar c1.cpp#A#x
//! (varWrite c2.c#GlobVar c1.cpp#A#x) { PC = "FA" }
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::factgraph::{edge_type, Edge, FactGraph, GraphError, NodeKind};

#[derive(Debug, Error)]
pub enum TaError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: `{name}` used before declaration")]
    Undeclared { line: usize, name: String },
    #[error("symbol {0:?} cannot be written to TA or fact files")]
    InvalidSymbol(String),
    #[error("attribute `{key}` given twice for `{subject}`")]
    DuplicateAttribute { subject: String, key: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Node(String),
    Edge(Edge),
}

impl std::fmt::Display for Subject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subject::Node(id) => f.write_str(id),
            Subject::Edge(e) => write!(f, "({e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrRecord {
    pub subject: Subject,
    pub attrs: Vec<(String, String)>,
}

/// A TA model in file order: instances, then edges, then attributes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaDocument {
    pub instances: Vec<(String, String)>,
    pub edges: Vec<Edge>,
    pub attributes: Vec<AttrRecord>,
}

fn check_symbol(s: &str) -> Result<(), TaError> {
    let bad = |c: char| c.is_whitespace() || matches!(c, '{' | '}' | '(' | ')' | '"' | '=');
    if s.is_empty() || s.contains(bad) {
        return Err(TaError::InvalidSymbol(s.to_string()));
    }
    Ok(())
}

fn quote(v: &str) -> String {
    let mut out = String::with_capacity(v.len() + 2);
    out.push('"');
    for c in v.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

impl TaDocument {
    pub fn from_graph(g: &FactGraph) -> Self {
        let instances = g
            .nodes()
            .map(|(id, k)| (id.to_string(), k.as_str().to_string()))
            .collect();
        let edges = g.edges().cloned().collect();
        let to_vec = |m: &BTreeMap<String, String>| m.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut attributes: Vec<AttrRecord> = g
            .node_attrs()
            .map(|(id, a)| AttrRecord {
                subject: Subject::Node(id.to_string()),
                attrs: to_vec(a),
            })
            .collect();
        attributes.extend(g.edge_attrs().map(|(e, a)| AttrRecord {
            subject: Subject::Edge(e.clone()),
            attrs: to_vec(a),
        }));
        TaDocument {
            instances,
            edges,
            attributes,
        }
    }

    pub fn to_graph(&self) -> Result<FactGraph, TaError> {
        let mut g = FactGraph::new();
        for (id, ty) in &self.instances {
            g.add_node(id.clone(), ty.parse::<NodeKind>()?)?;
        }
        for e in &self.edges {
            g.add_edge(e.clone())?;
        }
        let mut seen = HashSet::new();
        for rec in &self.attributes {
            for (k, v) in &rec.attrs {
                if !seen.insert((rec.subject.clone(), k.clone())) {
                    return Err(TaError::DuplicateAttribute {
                        subject: rec.subject.to_string(),
                        key: k.clone(),
                    });
                }
                match &rec.subject {
                    Subject::Node(id) => g.set_node_attr(id, k, v.clone())?,
                    Subject::Edge(e) => g.set_edge_attr(e, k, v.clone())?,
                }
            }
        }
        Ok(g)
    }

    pub fn emit(&self) -> Result<String, TaError> {
        let mut out = String::new();
        for (id, ty) in &self.instances {
            check_symbol(id)?;
            check_symbol(ty)?;
            writeln!(out, "$INSTANCE {id} {ty}").unwrap();
        }
        for e in &self.edges {
            for s in [&e.etype, &e.src, &e.dst] {
                check_symbol(s)?;
            }
            writeln!(out, "{e}").unwrap();
        }
        for rec in &self.attributes {
            if rec.attrs.is_empty() {
                continue;
            }
            out.push_str(&rec.subject.to_string());
            out.push_str(" {");
            for (k, v) in &rec.attrs {
                check_symbol(k)?;
                write!(out, " {k} = {}", quote(v)).unwrap();
            }
            out.push_str(" }\n");
        }
        Ok(out)
    }
}

/// Serialises `g` as TA text: instances by id, edges by (type, src, dst),
/// then attributes.
pub fn emit_ta(g: &FactGraph) -> Result<String, TaError> {
    TaDocument::from_graph(g).emit()
}

#[derive(PartialEq, PartialOrd)]
enum Section {
    Instances,
    Edges,
    Attributes,
}

pub fn parse_ta(text: &str) -> Result<TaDocument, TaError> {
    let mut doc = TaDocument::default();
    let mut section = Section::Instances;
    let mut nodes = HashSet::new();
    let mut edges = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        let malformed = |message: &str| TaError::Malformed {
            line,
            message: message.to_string(),
        };
        if let Some(rest) = l.strip_prefix("$INSTANCE") {
            if section > Section::Instances {
                return Err(malformed("instance after edges or attributes"));
            }
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let [id, ty] = toks[..] else {
                return Err(malformed("expected `$INSTANCE <id> <type>`"));
            };
            nodes.insert(id.to_string());
            doc.instances.push((id.to_string(), ty.to_string()));
        } else if let Some(brace) = l.find('{') {
            section = Section::Attributes;
            let subject = parse_subject(l[..brace].trim(), line)?;
            match &subject {
                Subject::Node(id) if !nodes.contains(id) => return Err(TaError::Undeclared { line, name: id.clone() }),
                Subject::Edge(e) if !edges.contains(e) => {
                    return Err(TaError::Undeclared {
                        line,
                        name: format!("({e})"),
                    })
                }
                _ => {}
            }
            let body = l[brace + 1..]
                .strip_suffix('}')
                .ok_or_else(|| malformed("attribute list must end with `}`"))?;
            doc.attributes.push(AttrRecord {
                subject,
                attrs: parse_attrs(body, line)?,
            });
        } else {
            if section > Section::Edges {
                return Err(malformed("edge after attributes"));
            }
            section = Section::Edges;
            let toks: Vec<&str> = l.split_whitespace().collect();
            let [etype, src, dst] = toks[..] else {
                return Err(malformed("expected `<type> <src> <dst>`"));
            };
            for end in [src, dst] {
                if !nodes.contains(end) {
                    return Err(TaError::Undeclared {
                        line,
                        name: end.to_string(),
                    });
                }
            }
            let e = Edge::new(etype, src, dst);
            edges.insert(e.clone());
            doc.edges.push(e);
        }
    }
    Ok(doc)
}

fn parse_subject(s: &str, line: usize) -> Result<Subject, TaError> {
    if let Some(inner) = s.strip_prefix('(') {
        let inner = inner.strip_suffix(')').ok_or_else(|| TaError::Malformed {
            line,
            message: "unclosed edge subject".into(),
        })?;
        let toks: Vec<&str> = inner.split_whitespace().collect();
        if let [t, a, b] = toks[..] {
            return Ok(Subject::Edge(Edge::new(t, a, b)));
        }
    } else if !s.is_empty() && !s.contains(char::is_whitespace) {
        return Ok(Subject::Node(s.to_string()));
    }
    Err(TaError::Malformed {
        line,
        message: format!("bad attribute subject `{s}`"),
    })
}

fn parse_attrs(body: &str, line: usize) -> Result<Vec<(String, String)>, TaError> {
    let err = |m: &str| TaError::Malformed {
        line,
        message: m.to_string(),
    };
    let mut out = Vec::new();
    let mut rest = body.trim_start();
    while !rest.is_empty() {
        let eq = rest.find('=').ok_or_else(|| err("expected `key = \"value\"`"))?;
        let key = rest[..eq].trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(err("bad attribute key"));
        }
        rest = rest[eq + 1..].trim_start();
        let mut chars = rest.char_indices();
        if !matches!(chars.next(), Some((_, '"'))) {
            return Err(err("attribute value must be quoted"));
        }
        let mut value = String::new();
        let mut end = None;
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    end = Some(i + 1);
                    break;
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, c)) => value.push(c),
                    None => break,
                },
                _ => value.push(c),
            }
        }
        let end = end.ok_or_else(|| err("unterminated string"))?;
        out.push((key.to_string(), value));
        rest = rest[end..].trim_start();
    }
    Ok(out)
}

/// Name of the fact file holding node instances.
pub const INSTANCE_RELATION: &str = "instance";

/// Fact-file contents keyed by file name (`<relation>.facts`).
pub type FactTables = BTreeMap<String, String>;

fn pc_column(pc: Option<&str>) -> &str {
    match pc {
        None | Some("true") => "",
        Some(pc) => pc,
    }
}

/// Joins PC attributes onto their rows: `<etype>.facts` with columns src,
/// dst, pc and `instance.facts` with id, type, pc. Every standard relation
/// gets a file, possibly empty.
pub fn ta2tsv(doc: &TaDocument) -> Result<FactTables, TaError> {
    let g = doc.to_graph()?;
    let mut relations: BTreeSet<&str> = edge_type::ALL.into_iter().collect();
    relations.extend(g.edges().map(|e| e.etype.as_str()));
    let mut tables = FactTables::new();
    for rel in relations {
        let mut body = String::new();
        for e in g.edges_of_type(rel) {
            let pc = pc_column(g.edge_pc(e));
            check_tsv(pc)?;
            writeln!(body, "{}\t{}\t{pc}", e.src, e.dst).unwrap();
        }
        tables.insert(format!("{rel}.facts"), body);
    }
    let mut body = String::new();
    for (id, kind) in g.nodes() {
        let pc = pc_column(g.node_pc(id));
        check_tsv(pc)?;
        writeln!(body, "{id}\t{kind}\t{pc}").unwrap();
    }
    tables.insert(format!("{INSTANCE_RELATION}.facts"), body);
    Ok(tables)
}

fn check_tsv(v: &str) -> Result<(), TaError> {
    if v.contains(['\t', '\n']) {
        return Err(TaError::InvalidSymbol(v.to_string()));
    }
    Ok(())
}

pub fn write_tables(tables: &FactTables, outdir: &Path) -> Result<(), TaError> {
    let io = |path: &Path, source| TaError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(outdir).map_err(|e| io(outdir, e))?;
    for (name, body) in tables {
        let path = outdir.join(name);
        std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factgraph::PC_KEY;

    fn sample() -> FactGraph {
        let mut g = FactGraph::new();
        g.add_node("GlobVar", NodeKind::Variable).unwrap();
        g.add_node("x", NodeKind::Variable).unwrap();
        g.add_node("updateX", NodeKind::Function).unwrap();
        let vw = Edge::new(edge_type::VAR_WRITE, "GlobVar", "x");
        let w = Edge::new(edge_type::WRITE, "updateX", "GlobVar");
        g.add_edge(vw.clone()).unwrap();
        g.add_edge(w.clone()).unwrap();
        g.set_edge_attr(&vw, PC_KEY, "FA").unwrap();
        g.set_edge_attr(&w, PC_KEY, "FA & !FB").unwrap();
        g
    }

    #[test]
    fn emits_in_declaration_order() {
        let text = emit_ta(&sample()).unwrap();
        assert_eq!(
            text,
            "$INSTANCE GlobVar VARIABLE\n$INSTANCE updateX FUNCTION\n$INSTANCE x VARIABLE\n\
             varWrite GlobVar x\nwrite updateX GlobVar\n\
             (varWrite GlobVar x) { PC = \"FA\" }\n(write updateX GlobVar) { PC = \"FA & !FB\" }\n"
        );
        assert_eq!(emit_ta(&FactGraph::new()).unwrap(), "");
    }

    #[test]
    fn round_trip() {
        let g = sample();
        assert_eq!(parse_ta(&emit_ta(&g).unwrap()).unwrap().to_graph().unwrap(), g);
    }

    #[test]
    fn declare_before_use() {
        assert!(matches!(
            parse_ta("x { PC = \"FA\" }\n$INSTANCE x VARIABLE\n"),
            Err(TaError::Undeclared { line: 1, .. })
        ));
        assert!(matches!(
            parse_ta("$INSTANCE x VARIABLE\ncall x y\n"),
            Err(TaError::Undeclared { line: 2, .. })
        ));
        assert!(matches!(
            parse_ta("$INSTANCE x VARIABLE\ncall x\n"),
            Err(TaError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn tsv_rows_carry_pcs() {
        let tables = ta2tsv(&TaDocument::from_graph(&sample())).unwrap();
        assert_eq!(tables["varWrite.facts"], "GlobVar\tx\tFA\n");
        assert_eq!(tables["write.facts"], "updateX\tGlobVar\tFA & !FB\n");
        assert_eq!(tables["call.facts"], "");
        assert_eq!(
            tables["instance.facts"],
            "GlobVar\tVARIABLE\t\nupdateX\tFUNCTION\t\nx\tVARIABLE\t\n"
        );
    }

    #[test]
    fn two_pcs_on_one_subject() {
        let text = "$INSTANCE x VARIABLE\nx { PC = \"FA\" }\nx { PC = \"FB\" }\n";
        let doc = parse_ta(text).unwrap();
        assert!(matches!(ta2tsv(&doc), Err(TaError::DuplicateAttribute { .. })));
    }

    #[test]
    fn opaque_attributes_survive() {
        let text = "$INSTANCE x VARIABLE\nx { PC = \"FA\" note = \"say \\\"hi\\\"\" }\n";
        let g = parse_ta(text).unwrap().to_graph().unwrap();
        assert_eq!(g.node_attrs().next().unwrap().1["note"], "say \"hi\"");
        assert_eq!(emit_ta(&g).unwrap(), text);
    }

    #[test]
    fn rejects_unwritable_symbols() {
        let mut g = FactGraph::new();
        g.add_node("a b", NodeKind::Variable).unwrap();
        assert!(matches!(emit_ta(&g), Err(TaError::InvalidSymbol(_))));
    }
}
