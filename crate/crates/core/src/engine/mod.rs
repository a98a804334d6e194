//! Lifted evaluation, projection onto products and the lifting check.

mod eval;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

pub use stats::{Phase, RunStats, StratumStats};

use crate::datalog::{AnnotatedDatabase, PlainDatabase, Program};
use crate::featexpr::{Configuration, FeatureModel, PcStore};
use eval::{Ground, Lifted};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("input relation `{0}` missing from the database")]
    MissingInput(String),
    #[error("relation `{relation}` has arity {found}, program declares {expected}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("feature model was compiled in a different store")]
    StoreMismatch,
    #[error("{0} features are too many to enumerate")]
    TooManyFeatures(usize),
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub feature_model: Option<FeatureModel>,
    pub collect_stats: bool,
    /// Check satisfiability modulo the feature model while joining instead
    /// of filtering afterwards.
    pub prune_with_fm_during_eval: bool,
}

/// Evaluates `p` over PC-annotated facts. Derived tuples carry the
/// disjunction over their derivations of the conjunction of body PCs.
pub fn evaluate_lifted(
    p: &Program,
    db: &AnnotatedDatabase,
    store: &mut PcStore,
    opts: &EvalOptions,
) -> Result<(AnnotatedDatabase, RunStats), EngineError> {
    let fm = opts.feature_model.as_ref().filter(|fm| !fm.is_trivial());
    if fm.is_some_and(|fm| fm.store_id.is_some_and(|id| id != store.id())) {
        return Err(EngineError::StoreMismatch);
    }
    let mut stats = RunStats::default();
    let start = Instant::now();
    let within = fm.filter(|_| opts.prune_with_fm_during_eval).map(|fm| fm.compiled);
    let outcome = eval::run(p, db, &mut Lifted { store, within })?;
    stats.record_phase("eval", start.elapsed());
    let mut out = outcome.db;
    if let (Some(fm), false) = (fm, opts.prune_with_fm_during_eval) {
        let start = Instant::now();
        let derived: Vec<String> = p.derived().map(|d| d.name.clone()).collect();
        stats.fm_removed = filter_relations(&mut out, &derived, fm, store);
        stats.record_phase("fm-filter", start.elapsed());
    }
    stats.unsat_dropped = outcome.ghosts;
    stats.strata = p
        .stratum_names()
        .into_iter()
        .zip(outcome.iterations)
        .map(|(rels, iterations)| StratumStats {
            relations: rels.into_iter().map(String::from).collect(),
            iterations,
        })
        .collect();
    if opts.collect_stats {
        stats.count_outputs(p, &out);
    }
    Ok((out, stats))
}

/// Classical evaluation: the same evaluator with the PC machinery replaced
/// by plain membership.
pub fn ground_eval(p: &Program, db: &PlainDatabase) -> Result<PlainDatabase, EngineError> {
    Ok(eval::run(p, db, &mut Ground)?.db)
}

/// Like [`ground_eval`] but also reports rounds per stratum.
pub fn ground_eval_with_stats(p: &Program, db: &PlainDatabase) -> Result<(PlainDatabase, Vec<usize>), EngineError> {
    let o = eval::run(p, db, &mut Ground)?;
    Ok((o.db, o.iterations))
}

/// The product database: tuples whose PC holds under `rho`.
pub fn project(db: &AnnotatedDatabase, rho: &Configuration, store: &PcStore) -> PlainDatabase {
    db.map(|pc| store.eval(pc, rho).then_some(true))
}

/// Drops tuples that exist in no valid product; returns the number dropped.
pub fn apply_feature_model(
    db: &AnnotatedDatabase,
    fm: &FeatureModel,
    store: &mut PcStore,
) -> (AnnotatedDatabase, usize) {
    let mut removed = 0;
    let out = db.map(|pc| {
        if store.and(pc, fm.compiled).is_false() {
            removed += 1;
            None
        } else {
            Some(pc)
        }
    });
    (out, removed)
}

/// In-place variant of [`apply_feature_model`] restricted to `relations`.
fn filter_relations(db: &mut AnnotatedDatabase, relations: &[String], fm: &FeatureModel, store: &mut PcStore) -> usize {
    let mut removed = 0;
    for name in relations {
        if let Some(rel) = db.relations.get_mut(name) {
            let before = rel.tuples.len();
            rel.tuples.retain(|_, pc| !store.and(*pc, fm.compiled).is_false());
            removed += before - rel.tuples.len();
        }
    }
    removed
}

pub type Contents = BTreeMap<String, BTreeSet<Vec<String>>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    /// Features present in the offending configuration.
    pub present: Vec<String>,
    /// `(relation, tuple)` produced by the product run only.
    pub missing: Vec<(String, Vec<String>)>,
    /// `(relation, tuple)` produced by the lifted run only.
    pub extra: Vec<(String, Vec<String>)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub configurations: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Most features [`verify_lifting`] will enumerate.
pub const MAX_VERIFY_FEATURES: usize = 12;

/// Checks, for every configuration over the store's features, that
/// projecting the lifted result equals evaluating the projected input.
pub fn verify_lifting(p: &Program, db: &AnnotatedDatabase, store: &mut PcStore) -> Result<VerifyReport, EngineError> {
    let n = store.features().len();
    if n > MAX_VERIFY_FEATURES {
        return Err(EngineError::TooManyFeatures(n));
    }
    let (lifted, _) = evaluate_lifted(p, db, store, &EvalOptions::default())?;
    let mut report = VerifyReport::default();
    for rho in Configuration::enumerate(n) {
        report.configurations += 1;
        let expected = ground_eval(p, &project(db, &rho, store))?.contents();
        let got = project(&lifted, &rho, store).contents();
        if expected != got {
            let flatten = |c: &Contents| -> BTreeSet<(String, Vec<String>)> {
                c.iter()
                    .flat_map(|(r, ts)| ts.iter().map(move |t| (r.clone(), t.clone())))
                    .collect()
            };
            let (e, g) = (flatten(&expected), flatten(&got));
            report.counterexamples.push(Counterexample {
                present: rho.present().map(|f| store.features().name(f).to_string()).collect(),
                missing: e.difference(&g).cloned().collect(),
                extra: g.difference(&e).cloned().collect(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;
    use crate::featexpr::Pc;

    const TC: &str = ".decl e(a: symbol, b: symbol)\n.decl t(a: symbol, b: symbol)\n.input e\n.output t\n\
                      t(x, y) :- e(x, y).\nt(x, z) :- t(x, y), e(y, z).";

    const BEH_ALTER_RULES: &str = ".decl write(f: symbol, v: symbol)\n.decl varWrite(a: symbol, b: symbol)\n\
        .decl varInfFunc(v: symbol, f: symbol)\n.decl cFunction(f: symbol, c: symbol)\n\
        .decl transVarWrite(a: symbol, b: symbol)\n.decl behAlter(f0: symbol, f1: symbol)\n\
        .input write, varWrite, varInfFunc, cFunction\n.output transVarWrite, behAlter\n\
        transVarWrite(v0, v1) :- varWrite(v0, v1).\n\
        transVarWrite(v0, v2) :- transVarWrite(v0, v1), varWrite(v1, v2).\n\
        behAlter(f0, f1) :- write(f0, v0), transVarWrite(v0, v1), varInfFunc(v1, f1), cFunction(f0, c0), cFunction(f1, c1), c0 != c1.";

    fn beh_alter_db(store: &mut PcStore, vw: &[(&str, &str, &str)]) -> AnnotatedDatabase {
        let mut db = AnnotatedDatabase::new();
        for r in ["write", "varWrite", "varInfFunc", "cFunction"] {
            db.ensure_relation(r, 2);
        }
        for (a, b, pc) in vw {
            let pc = store.parse(pc).unwrap();
            db.insert("varWrite", &[a, b], pc);
        }
        db
    }

    #[test]
    fn conjunction_along_a_chain() {
        let p = parse_program(BEH_ALTER_RULES).unwrap();
        let mut store = PcStore::new();
        let db = beh_alter_db(&mut store, &[("a", "b", "FA"), ("b", "c", "FB")]);
        let (out, _) = evaluate_lifted(&p, &db, &mut store, &EvalOptions::default()).unwrap();
        let fa_fb = store.parse("FA & FB").unwrap();
        assert_eq!(out.get("transVarWrite", &["a", "c"]), Some(fa_fb));
        assert!(verify_lifting(&p, &db, &mut store).unwrap().passed());
    }

    #[test]
    fn merged_derivations_and_ghosts() {
        let p = parse_program(BEH_ALTER_RULES).unwrap();
        let mut store = PcStore::new();
        // a->c via FA&FB and via FA&!FB; x->z only via FC&!FC
        let db = beh_alter_db(
            &mut store,
            &[
                ("a", "b1", "FA"),
                ("b1", "c", "FB"),
                ("a", "b2", "FA"),
                ("b2", "c", "!FB"),
                ("x", "y", "FC"),
                ("y", "z", "!FC"),
            ],
        );
        let opts = EvalOptions {
            collect_stats: true,
            ..Default::default()
        };
        let (out, stats) = evaluate_lifted(&p, &db, &mut store, &opts).unwrap();
        let fa = store.parse("FA").unwrap();
        assert_eq!(out.get("transVarWrite", &["a", "c"]), Some(fa));
        assert_eq!(out.get("transVarWrite", &["x", "z"]), None);
        assert_eq!(stats.unsat_dropped, 1);
        let ground = ground_eval(&p, &db.to_plain()).unwrap();
        assert_eq!(
            ground.relation("transVarWrite").unwrap().len(),
            out.relation("transVarWrite").unwrap().len() + stats.unsat_dropped
        );
    }

    #[test]
    fn ten_node_cycle_closure() {
        let p = parse_program(TC).unwrap();
        let mut db = PlainDatabase::new();
        for i in 0..10 {
            let (a, b) = (format!("n{i}"), format!("n{}", (i + 1) % 10));
            db.insert("e", &[&a, &b], true);
        }
        let out = ground_eval(&p, &db).unwrap();
        assert_eq!(out.relation("t").unwrap().len(), 100);
    }

    #[test]
    fn empty_inputs_give_empty_outputs() {
        let p = parse_program(BEH_ALTER_RULES).unwrap();
        let mut store = PcStore::new();
        let db = beh_alter_db(&mut store, &[]);
        let (out, _) = evaluate_lifted(&p, &db, &mut store, &EvalOptions::default()).unwrap();
        assert!(out.relation("behAlter").unwrap().is_empty());
        assert_eq!(
            evaluate_lifted(&p, &AnnotatedDatabase::new(), &mut store, &EvalOptions::default()).unwrap_err(),
            EngineError::MissingInput("write".into())
        );
    }

    #[test]
    fn feature_model_post_pass_and_pruning() {
        let p = parse_program(TC).unwrap();
        let mut store = PcStore::new();
        let mut db = AnnotatedDatabase::new();
        let (f0, f1) = (store.parse("Feat0").unwrap(), store.parse("Feat1").unwrap());
        db.insert("e", &["a", "b"], f0);
        db.insert("e", &["b", "c"], f1);
        let fm = FeatureModel::parse("!(Feat0 & Feat1)", &mut store).unwrap();
        for prune in [false, true] {
            let opts = EvalOptions {
                feature_model: Some(fm.clone()),
                collect_stats: true,
                prune_with_fm_during_eval: prune,
            };
            let (out, stats) = evaluate_lifted(&p, &db, &mut store, &opts).unwrap();
            assert_eq!(out.get("t", &["a", "c"]), None);
            assert_eq!(out.get("t", &["a", "b"]), Some(f0));
            assert_eq!(stats.fm_removed + stats.unsat_dropped, 1);
        }
        let mut other = PcStore::new();
        let opts = EvalOptions {
            feature_model: Some(fm),
            ..Default::default()
        };
        assert_eq!(
            evaluate_lifted(&p, &db, &mut other, &opts).unwrap_err(),
            EngineError::StoreMismatch
        );
    }

    #[test]
    fn projection() {
        let mut store = PcStore::new();
        let mut db = AnnotatedDatabase::new();
        let fa_nfb = store.parse("FA & !FB").unwrap();
        db.insert("write", &["updateX", "GlobVar"], fa_nfb);
        db.insert("call", &["bar", "foo"], Pc::TRUE);
        let fa = store.features().lookup("FA").unwrap();
        let fb = store.features().lookup("FB").unwrap();
        let only_fa = Configuration::from_present(store.features(), [fa]);
        let both = Configuration::from_present(store.features(), [fa, fb]);
        let none = Configuration::none(store.features());
        assert!(project(&db, &only_fa, &store)
            .get("write", &["updateX", "GlobVar"])
            .is_some());
        assert!(project(&db, &both, &store)
            .get("write", &["updateX", "GlobVar"])
            .is_none());
        let p0 = project(&db, &none, &store);
        assert_eq!(p0.tuple_count(), 1);
        assert_eq!(project(&p0.annotate(), &none, &store).contents(), p0.contents());
    }
}
