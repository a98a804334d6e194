use proptest::prelude::*;
use splift::datalog::{parse_program, AnnotatedDatabase};
use splift::engine::{evaluate_lifted, ground_eval, verify_lifting, EvalOptions};
use splift::featexpr::{enum_group_constraints, FeatureModel, FeatureOrigin, PcStore};
use splift::synth::{behaviour_workload, random_lifting_instance, WorkloadParams};

fn lifting_holds(seed: u64) {
    let mut inst = random_lifting_instance(seed, 8, 200);
    let report = verify_lifting(&inst.program, &inst.db, &mut inst.store).unwrap();
    assert!(report.passed(), "seed {seed}: {:?}", report.counterexamples.first());
    assert_eq!(report.configurations, 1 << inst.store.features().len());
}

fn conservative(seed: u64) {
    let mut inst = random_lifting_instance(seed, 8, 200);
    let stripped = inst.db.strip_pcs();
    let (lifted, stats) = evaluate_lifted(&inst.program, &stripped, &mut inst.store, &EvalOptions::default()).unwrap();
    let ground = ground_eval(&inst.program, &stripped.to_plain()).unwrap();
    assert_eq!(lifted.contents(), ground.contents(), "seed {seed}");
    assert!(lifted
        .relations
        .values()
        .flat_map(|r| r.tuples.values())
        .all(|pc| pc.is_true()));
    assert_eq!(stats.unsat_dropped, 0);
}

#[test]
fn hundred_seeded_instances() {
    for seed in 0..100 {
        lifting_holds(seed);
    }
}

#[test]
fn stripping_pcs_gives_the_ground_result() {
    for seed in 0..100 {
        conservative(seed);
    }
}

fn derived_count(p: &splift::datalog::Program, db: &AnnotatedDatabase) -> usize {
    p.derived().filter_map(|d| db.relation(&d.name)).map(|r| r.len()).sum()
}

#[test]
fn planted_contradictions_are_dropped_exactly() {
    for (seed, gadgets) in [(1, 0), (2, 1), (3, 7), (4, 40)] {
        let mut inst = behaviour_workload(&WorkloadParams {
            tuples: 5_000,
            features: 50,
            variational_percent: 2.0,
            gadgets,
            components: 8,
            seed,
        });
        let (lifted, stats) =
            evaluate_lifted(&inst.program, &inst.db, &mut inst.store, &EvalOptions::default()).unwrap();
        let ground = ground_eval(&inst.program, &inst.db.to_plain()).unwrap();
        assert_eq!(stats.unsat_dropped, inst.planted, "seed {seed}");
        assert_eq!(
            derived_count(&inst.program, &lifted),
            derived_count(&inst.program, &ground.annotate()) - stats.unsat_dropped
        );
    }
}

#[test]
fn feature_set_model_removes_exclusive_combinations() {
    let p = parse_program(".decl e(a: symbol)\n.decl r(a: symbol)\n.input e\n.output r\nr(x) :- e(x).").unwrap();
    let mut store = PcStore::new();
    let ids: Vec<_> = ["Feat0", "Feat1", "Feat2", "Feat3"]
        .iter()
        .map(|n| store.register(n, FeatureOrigin::EnumLiteral))
        .collect();
    let fm = FeatureModel::from_constraints(enum_group_constraints(&ids, false), &mut store).unwrap();
    let mut db = AnnotatedDatabase::new();
    let both = store.parse("Feat0 & Feat1").unwrap();
    let one = store.parse("Feat0").unwrap();
    db.insert("e", &["both"], both);
    db.insert("e", &["one"], one);
    let opts = EvalOptions {
        feature_model: Some(fm),
        ..Default::default()
    };
    let (out, stats) = evaluate_lifted(&p, &db, &mut store, &opts).unwrap();
    assert_eq!(out.get("r", &["both"]), None);
    assert_eq!(out.get("r", &["one"]), Some(one));
    assert_eq!(stats.fm_removed, 1);

    let pruning = EvalOptions {
        prune_with_fm_during_eval: true,
        ..opts
    };
    let (out2, _) = evaluate_lifted(&p, &db, &mut store, &pruning).unwrap();
    assert_eq!(out2.tuple_set("r"), out.tuple_set("r"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn lifting_any_seed(seed in any::<u64>()) {
        lifting_holds(seed);
        conservative(seed);
    }
}
