use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use indexmap::{IndexMap, IndexSet};

use super::{DatalogError, Program};
use crate::featexpr::{Pc, PcStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(pub u32);

#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    names: IndexSet<String>,
}

impl SymbolTable {
    pub fn intern(&mut self, s: &str) -> Sym {
        if let Some(i) = self.names.get_index_of(s) {
            return Sym(i as u32);
        }
        Sym(self.names.insert_full(s.to_string()).0 as u32)
    }

    pub fn lookup(&self, s: &str) -> Option<Sym> {
        self.names.get_index_of(s).map(|i| Sym(i as u32))
    }

    pub fn name(&self, s: Sym) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Tuples with their annotation, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation<V> {
    pub arity: usize,
    pub tuples: IndexMap<Vec<Sym>, V>,
}

impl<V> Relation<V> {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            tuples: IndexMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Relations by name over a shared symbol table.
#[derive(Clone, Debug)]
pub struct Database<V> {
    pub symbols: SymbolTable,
    pub relations: BTreeMap<String, Relation<V>>,
}

/// Every tuple carries its presence condition; absent means false.
pub type AnnotatedDatabase = Database<Pc>;
/// Presence is membership; every stored value is `true`.
pub type PlainDatabase = Database<bool>;

impl<V> Default for Database<V> {
    fn default() -> Self {
        Database {
            symbols: SymbolTable::default(),
            relations: BTreeMap::new(),
        }
    }
}

impl<V: Copy> Database<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation<V>> {
        self.relations.get(name)
    }

    pub fn ensure_relation(&mut self, name: &str, arity: usize) -> &mut Relation<V> {
        self.relations
            .entry(name.to_string())
            .or_insert_with(|| Relation::new(arity))
    }

    /// Inserts or overwrites a tuple given as strings.
    pub fn insert(&mut self, relation: &str, tuple: &[&str], value: V) {
        let t: Vec<Sym> = tuple.iter().map(|s| self.symbols.intern(s)).collect();
        self.ensure_relation(relation, tuple.len()).tuples.insert(t, value);
    }

    pub fn get(&self, relation: &str, tuple: &[&str]) -> Option<V> {
        let t: Option<Vec<Sym>> = tuple.iter().map(|s| self.symbols.lookup(s)).collect();
        self.relations.get(relation)?.tuples.get(&t?).copied()
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    pub fn strings(&self, tuple: &[Sym]) -> Vec<String> {
        tuple.iter().map(|s| self.symbols.name(*s).to_string()).collect()
    }

    /// The tuples of `relation` as strings, sorted.
    pub fn tuple_set(&self, relation: &str) -> BTreeSet<Vec<String>> {
        self.relations
            .get(relation)
            .map(|r| r.tuples.keys().map(|t| self.strings(t)).collect())
            .unwrap_or_default()
    }

    /// All non-empty relations as sorted string tuples.
    pub fn contents(&self) -> BTreeMap<String, BTreeSet<Vec<String>>> {
        self.relations
            .iter()
            .filter(|(_, r)| !r.is_empty())
            .map(|(name, _)| (name.clone(), self.tuple_set(name)))
            .collect()
    }

    pub fn map<W>(&self, mut f: impl FnMut(V) -> Option<W>) -> Database<W> {
        Database {
            symbols: self.symbols.clone(),
            relations: self
                .relations
                .iter()
                .map(|(name, r)| {
                    let tuples = r
                        .tuples
                        .iter()
                        .filter_map(|(t, v)| f(*v).map(|w| (t.clone(), w)))
                        .collect();
                    (name.clone(), Relation { arity: r.arity, tuples })
                })
                .collect(),
        }
    }
}

impl AnnotatedDatabase {
    /// The same tuples with every PC replaced by `true`.
    pub fn strip_pcs(&self) -> AnnotatedDatabase {
        self.map(|_| Some(Pc::TRUE))
    }

    pub fn to_plain(&self) -> PlainDatabase {
        self.map(|_| Some(true))
    }
}

impl PlainDatabase {
    pub fn annotate(&self) -> AnnotatedDatabase {
        self.map(|_| Some(Pc::TRUE))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    /// Rows whose PC is unsatisfiable; they never enter the database.
    pub dropped_unsat: usize,
    /// Rows folded into an earlier row for the same tuple.
    pub merged: usize,
}

/// Loads `<relation>.facts` for every input relation of `program`.
pub fn load_facts(
    dir: &Path,
    program: &Program,
    store: &mut PcStore,
) -> Result<(AnnotatedDatabase, LoadReport), DatalogError> {
    load_with(program, store, |name| {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(DatalogError::MissingFacts(path));
        }
        let text = std::fs::read_to_string(&path).map_err(|source| DatalogError::Io {
            path: path.clone(),
            source,
        })?;
        Ok((path, text))
    })
}

/// Like [`load_facts`] but reads from in-memory tables keyed by file name.
pub fn load_fact_tables(
    tables: &BTreeMap<String, String>,
    program: &Program,
    store: &mut PcStore,
) -> Result<(AnnotatedDatabase, LoadReport), DatalogError> {
    load_with(program, store, |name| {
        let path = PathBuf::from(name);
        match tables.get(name) {
            Some(text) => Ok((path, text.clone())),
            None => Err(DatalogError::MissingFacts(path)),
        }
    })
}

fn load_with(
    program: &Program,
    store: &mut PcStore,
    mut read: impl FnMut(&str) -> Result<(PathBuf, String), DatalogError>,
) -> Result<(AnnotatedDatabase, LoadReport), DatalogError> {
    let mut db = AnnotatedDatabase::new();
    let mut report = LoadReport::default();
    for decl in program.inputs() {
        let (path, text) = read(&format!("{}.facts", decl.name))?;
        let arity = decl.arity();
        db.ensure_relation(&decl.name, arity);
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != arity && cols.len() != arity + 1 {
                return Err(DatalogError::FactArity {
                    path,
                    line: i + 1,
                    relation: decl.name.clone(),
                    expected: arity,
                    found: cols.len(),
                });
            }
            report.rows += 1;
            let pc = match cols.get(arity).map(|s| s.trim()) {
                None | Some("") => Pc::TRUE,
                Some(text) => store.parse(text).map_err(|source| DatalogError::BadPc {
                    path: path.clone(),
                    line: i + 1,
                    source,
                })?,
            };
            if pc.is_false() {
                report.dropped_unsat += 1;
                continue;
            }
            let tuple: Vec<Sym> = cols[..arity].iter().map(|s| db.symbols.intern(s)).collect();
            let rel = db.relations.get_mut(&decl.name).unwrap();
            match rel.tuples.get_mut(&tuple) {
                Some(old) => {
                    *old = store.or(*old, pc);
                    report.merged += 1;
                }
                None => {
                    rel.tuples.insert(tuple, pc);
                }
            }
        }
    }
    Ok((db, report))
}

/// Rows of `relation` in the fact-file format: columns, then the rendered
/// PC (empty when true). Rows are sorted.
pub fn write_relation(db: &AnnotatedDatabase, relation: &str, store: &PcStore) -> String {
    let Some(rel) = db.relation(relation) else {
        return String::new();
    };
    let mut rows: Vec<String> = rel
        .tuples
        .iter()
        .map(|(t, pc)| {
            let mut row = db.strings(t).join("\t");
            row.push('\t');
            if !pc.is_true() {
                row.push_str(&store.render(*pc));
            }
            row
        })
        .collect();
    rows.sort();
    let mut out = String::new();
    for r in rows {
        writeln!(out, "{r}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn program() -> Program {
        parse_program(".decl varWrite(a: symbol, b: symbol)\n.input varWrite").unwrap()
    }

    #[test]
    fn rows_merge_and_unsat_rows_drop() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("varWrite.facts"),
            "GlobVar\tx\tFA\nGlobVar\tx\tFB\na\tb\t\nc\td\nz\tz\tFA & !FA\n",
        )
        .unwrap();
        let mut store = PcStore::new();
        let (db, report) = load_facts(dir.path(), &program(), &mut store).unwrap();
        let fa_or_fb = store.parse("FA | FB").unwrap();
        assert_eq!(db.get("varWrite", &["GlobVar", "x"]), Some(fa_or_fb));
        assert_eq!(db.get("varWrite", &["a", "b"]), Some(Pc::TRUE));
        assert_eq!(db.get("varWrite", &["c", "d"]), Some(Pc::TRUE));
        assert_eq!(db.get("varWrite", &["z", "z"]), None);
        assert_eq!(
            report,
            LoadReport {
                rows: 5,
                dropped_unsat: 1,
                merged: 1
            }
        );
        assert_eq!(
            write_relation(&db, "varWrite", &store),
            "GlobVar\tx\tFA | FB\na\tb\t\nc\td\t\n"
        );
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = PcStore::new();
        assert!(matches!(
            load_facts(dir.path(), &program(), &mut store),
            Err(DatalogError::MissingFacts(_))
        ));
        std::fs::write(dir.path().join("varWrite.facts"), "a\tb\tc\td\n").unwrap();
        assert!(matches!(
            load_facts(dir.path(), &program(), &mut store),
            Err(DatalogError::FactArity { line: 1, found: 4, .. })
        ));
        std::fs::write(dir.path().join("varWrite.facts"), "a\tb\n\na\tb\tFA &\n").unwrap();
        assert!(matches!(
            load_facts(dir.path(), &program(), &mut store),
            Err(DatalogError::BadPc { line: 3, .. })
        ));
    }
}
