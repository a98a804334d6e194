//! Positive Datalog over symbols: declarations, rules, strata and fact
//! loading.

mod db;
mod parser;

use std::collections::HashMap;
use std::path::PathBuf;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

pub use db::{
    load_fact_tables, load_facts, write_relation, AnnotatedDatabase, Database, LoadReport, PlainDatabase, Relation,
    Sym, SymbolTable,
};

use crate::featexpr::FeatureExprError;

#[derive(Debug, Error)]
pub enum DatalogError {
    #[error("line {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: undeclared relation `{name}`")]
    UndeclaredRelation { name: String, line: usize },
    #[error("line {line}: relation `{name}` declared twice")]
    Redeclared { name: String, line: usize },
    #[error("line {line}: `{name}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        line: usize,
    },
    #[error("line {line}: variable `{var}` does not occur in a body atom")]
    RangeRestriction { var: String, line: usize },
    #[error("{}:{line}: `{relation}` rows have {expected} columns, found {found}", path.display())]
    FactArity {
        path: PathBuf,
        line: usize,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("{}:{line}: bad presence condition: {source}", path.display())]
    BadPc {
        path: PathBuf,
        line: usize,
        #[source]
        source: FeatureExprError,
    },
    #[error("missing fact file {}", .0.display())]
    MissingFacts(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub attributes: Vec<String>,
    pub input: bool,
    pub output: bool,
}

impl RelationDecl {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// Index into the rule's variable list.
    Var(usize),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    /// Index into `Program::decls`.
    pub relation: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub lhs: Term,
    pub op: CmpOp,
    pub rhs: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub constraints: Vec<Constraint>,
    pub variables: Vec<String>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    /// Relations defined here, by declaration index.
    pub relations: Vec<usize>,
    /// Rules whose head is defined here.
    pub rules: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub decls: Vec<RelationDecl>,
    pub rules: Vec<Rule>,
    pub strata: Vec<Stratum>,
    by_name: HashMap<String, usize>,
}

impl Program {
    pub fn relation(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn decl(&self, name: &str) -> Option<&RelationDecl> {
        self.relation(name).map(|i| &self.decls[i])
    }

    pub fn inputs(&self) -> impl Iterator<Item = &RelationDecl> {
        self.decls.iter().filter(|d| d.input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &RelationDecl> {
        self.decls.iter().filter(|d| d.output)
    }

    /// Relations that appear in some rule head.
    pub fn derived(&self) -> impl Iterator<Item = &RelationDecl> {
        self.strata
            .iter()
            .flat_map(|s| s.relations.iter())
            .map(|&r| &self.decls[r])
    }

    pub fn stratum_names(&self) -> Vec<Vec<&str>> {
        self.strata
            .iter()
            .map(|s| s.relations.iter().map(|&r| self.decls[r].name.as_str()).collect())
            .collect()
    }

    fn new(decls: Vec<RelationDecl>, rules: Vec<Rule>) -> Self {
        let by_name = decls.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();
        let mut p = Program {
            decls,
            rules,
            strata: Vec::new(),
            by_name,
        };
        p.strata = stratify(&p);
        p
    }
}

/// Strata are the dependency SCCs of the derived relations in topological
/// order.
fn stratify(p: &Program) -> Vec<Stratum> {
    let mut g = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..p.decls.len()).map(|i| g.add_node(i)).collect();
    let mut is_derived = vec![false; p.decls.len()];
    for r in &p.rules {
        is_derived[r.head.relation] = true;
        for a in &r.body {
            g.update_edge(nodes[a.relation], nodes[r.head.relation], ());
        }
    }
    let mut sccs = tarjan_scc(&g);
    sccs.reverse();
    sccs.into_iter()
        .filter_map(|scc| {
            let mut relations: Vec<usize> = scc.iter().map(|n| g[*n]).filter(|&r| is_derived[r]).collect();
            if relations.is_empty() {
                return None;
            }
            relations.sort_unstable();
            let rules = (0..p.rules.len())
                .filter(|&i| relations.contains(&p.rules[i].head.relation))
                .collect();
            Some(Stratum { relations, rules })
        })
        .collect()
}

pub fn parse_program(text: &str) -> Result<Program, DatalogError> {
    parser::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BEH_ALTER_RULES: &str = r#"
        .decl write(f: symbol, v: symbol)
        .decl varWrite(v0: symbol, v1: symbol)
        .decl varInfFunc(v: symbol, f: symbol)
        .decl cFunction(f: symbol, c: symbol)
        .decl transVarWrite(v0: symbol, v1: symbol)
        .decl behAlter(f0: symbol, f1: symbol)
        .input write, varWrite, varInfFunc, cFunction
        .output transVarWrite, behAlter
        transVarWrite(v0, v1) :- varWrite(v0, v1).
        transVarWrite(v0, v2) :- transVarWrite(v0, v1), varWrite(v1, v2).
        behAlter(f0, f1) :- write(f0, v0), transVarWrite(v0, v1), varInfFunc(v1, f1),
            cFunction(f0, c0), cFunction(f1, c1), c0 != c1.
    "#;

    #[test]
    fn beh_alter_strata() {
        let p = parse_program(BEH_ALTER_RULES).unwrap();
        assert_eq!(p.rules.len(), 3);
        assert_eq!(p.stratum_names(), vec![vec!["transVarWrite"], vec!["behAlter"]]);
        assert_eq!(p.rules[2].constraints.len(), 1);
        assert_eq!(p.rules[2].constraints[0].op, CmpOp::Ne);
    }

    #[test]
    fn range_restriction() {
        let src = ".decl a(x: symbol)\n.decl b(x: symbol, y: symbol)\nb(x, y) :- a(x).";
        assert!(matches!(
            parse_program(src),
            Err(DatalogError::RangeRestriction { ref var, line: 3 }) if var == "y"
        ));
        let src = ".decl a(x: symbol)\n.decl b(x: symbol)\nb(x) :- a(x), y != x.";
        assert!(matches!(parse_program(src), Err(DatalogError::RangeRestriction { .. })));
    }

    #[test]
    fn declaration_errors() {
        assert!(matches!(
            parse_program(".decl a(x: symbol)\nb(x) :- a(x)."),
            Err(DatalogError::UndeclaredRelation { .. })
        ));
        assert!(matches!(
            parse_program(".decl a(x: symbol)\n.decl b(x: symbol)\nb(x) :- a(x, x)."),
            Err(DatalogError::ArityMismatch {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_program(".decl a(x: symbol)\n.decl a(y: symbol)"),
            Err(DatalogError::Redeclared { .. })
        ));
        assert!(matches!(
            parse_program(".decl a(x: number)"),
            Err(DatalogError::Syntax { .. })
        ));
        assert!(matches!(parse_program(".decl a()"), Err(DatalogError::Syntax { .. })));
    }

    #[test]
    fn constants_facts_and_wildcards() {
        let src = r#"
            .decl e(x: symbol, y: symbol)
            .decl r(x: symbol)
            e("a", "b").
            r(x) :- e(x, _), x = "a". // trailing comment
        "#;
        let p = parse_program(src).unwrap();
        assert!(p.rules[0].body.is_empty());
        assert_eq!(p.rules[0].head.terms[0], Term::Const("a".into()));
        assert_eq!(p.rules[1].variables.len(), 2);
        assert!(matches!(
            parse_program(".decl e(x: symbol)\ne(x)."),
            Err(DatalogError::RangeRestriction { .. })
        ));
    }

    #[test]
    fn mutual_recursion_shares_a_stratum() {
        let src = ".decl e(x: symbol, y: symbol)\n.decl a(x: symbol)\n.decl b(x: symbol)\n\
                   a(y) :- b(x), e(x, y).\nb(y) :- a(x), e(x, y).\nb(x) :- e(x, _).";
        let p = parse_program(src).unwrap();
        assert_eq!(p.stratum_names(), vec![vec!["a", "b"]]);
    }
}
