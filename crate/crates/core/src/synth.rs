//! Seeded generators: random formulas, fact graphs, lifting instances and
//! behaviour-alteration workloads with planted unsatisfiable joins.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::behaviour_alteration_program;
use crate::datalog::{parse_program, AnnotatedDatabase, Program};
use crate::factgraph::{edge_type, Edge, FactGraph, NodeKind, PC_KEY};
use crate::featexpr::{FeatureExpr, FeatureId, FeatureOrigin, Pc, PcStore};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Registers `n` features named `F0`, `F1`, ...
pub fn register_features(store: &mut PcStore, n: usize) -> Vec<FeatureId> {
    (0..n)
        .map(|i| store.register(&format!("F{i}"), FeatureOrigin::DeclaredBoolean))
        .collect()
}

/// A random formula over `features` with nesting depth at most `depth`.
pub fn random_expr(rng: &mut impl Rng, features: &[FeatureId], depth: u32) -> FeatureExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..20) {
            0 => FeatureExpr::True,
            1 => FeatureExpr::False,
            _ => FeatureExpr::Var(*features.choose(rng).unwrap()),
        };
    }
    match rng.gen_range(0..3) {
        0 => FeatureExpr::not(random_expr(rng, features, depth - 1)),
        1 => FeatureExpr::and(
            random_expr(rng, features, depth - 1),
            random_expr(rng, features, depth - 1),
        ),
        _ => FeatureExpr::or(
            random_expr(rng, features, depth - 1),
            random_expr(rng, features, depth - 1),
        ),
    }
}

/// Truth table of `expr` over the first `n` features, one bit per
/// configuration (bit `m` is the configuration whose present set is `m`).
pub fn truth_table(expr: &FeatureExpr, n: usize) -> Vec<u64> {
    let rows = 1usize << n;
    let words = rows.div_ceil(64);
    let mask_tail = |mut t: Vec<u64>| {
        if !rows.is_multiple_of(64) {
            let last = t.len() - 1;
            t[last] &= (1u64 << (rows % 64)) - 1;
        }
        t
    };
    let t = match expr {
        FeatureExpr::True => vec![u64::MAX; words],
        FeatureExpr::False => vec![0; words],
        FeatureExpr::Var(f) => (0..words)
            .map(|w| {
                (0..64)
                    .filter(|b| (w * 64 + b) >> f.index() & 1 == 1)
                    .fold(0u64, |acc, b| acc | 1 << b)
            })
            .collect(),
        FeatureExpr::Not(e) => truth_table(e, n).into_iter().map(|x| !x).collect(),
        FeatureExpr::And(a, b) => truth_table(a, n)
            .into_iter()
            .zip(truth_table(b, n))
            .map(|(x, y)| x & y)
            .collect(),
        FeatureExpr::Or(a, b) => truth_table(a, n)
            .into_iter()
            .zip(truth_table(b, n))
            .map(|(x, y)| x | y)
            .collect(),
    };
    mask_tail(t)
}

/// A satisfiable PC: `true` with probability `p_true`, otherwise a random
/// small formula.
fn random_pc(rng: &mut impl Rng, store: &mut PcStore, features: &[FeatureId], p_true: f64) -> Pc {
    if features.is_empty() || rng.gen_bool(p_true) {
        return Pc::TRUE;
    }
    loop {
        let e = random_expr(rng, features, 2);
        let pc = store.to_pc(&e);
        if !pc.is_false() {
            return pc;
        }
    }
}

/// A random graph exercising every node kind, several edge types and
/// attribute values that need escaping.
pub fn random_fact_graph(rng: &mut impl Rng, store: &mut PcStore) -> FactGraph {
    let features = register_features(store, rng.gen_range(1..=6));
    let mut g = FactGraph::new();
    let n = rng.gen_range(1..=30);
    let mut ids = Vec::new();
    for i in 0..n {
        let kind = NodeKind::ALL[rng.gen_range(0..NodeKind::ALL.len())];
        let id = match rng.gen_range(0..4) {
            0 => format!("C{i}"),
            1 => format!("src/f{i}.c#fn_{i}"),
            2 => format!("f{i}.cpp#A#x~{}", rng.gen_range(2..5)),
            _ => format!("n{i}:{}", kind.as_str().to_lowercase()),
        };
        g.add_node(id.clone(), kind).unwrap();
        ids.push(id);
    }
    let mut etypes: Vec<&str> = edge_type::ALL.to_vec();
    etypes.push("uses");
    for _ in 0..rng.gen_range(0..=3 * n) {
        let e = Edge::new(
            *etypes.choose(rng).unwrap(),
            ids.choose(rng).unwrap().clone(),
            ids.choose(rng).unwrap().clone(),
        );
        if g.contains_edge(&e) {
            continue;
        }
        g.add_edge(e.clone()).unwrap();
        if rng.gen_bool(0.5) {
            let pc = random_pc(rng, store, &features, 0.0);
            g.set_edge_attr(&e, PC_KEY, store.render(pc)).unwrap();
        }
        if rng.gen_bool(0.2) {
            g.set_edge_attr(&e, "weight", rng.gen_range(0..100).to_string())
                .unwrap();
        }
    }
    const VALUES: &[&str] = &[
        "plain",
        "two words",
        "say \"hi\"",
        "back\\slash",
        "line\nbreak",
        "ünï",
        "",
    ];
    for id in &ids {
        if rng.gen_bool(0.3) {
            let pc = random_pc(rng, store, &features, 0.2);
            g.set_node_attr(id, PC_KEY, store.render(pc)).unwrap();
        }
        if rng.gen_bool(0.3) {
            g.set_node_attr(id, "label", *VALUES.choose(rng).unwrap()).unwrap();
        }
    }
    g
}

/// A program, an annotated database and the store both live in.
pub struct Instance {
    pub program: Program,
    pub db: AnnotatedDatabase,
    pub store: PcStore,
    /// Joins planted to be unsatisfiable, counted in dropped derived tuples.
    pub planted: usize,
}

const VARS: [&str; 4] = ["x", "y", "z", "w"];

/// A random positive program over three binary inputs, one unary input and
/// three derived relations.
pub fn random_program(rng: &mut impl Rng) -> Program {
    let mut text = String::from(
        ".decl e0(a: symbol, b: symbol)\n.decl e1(a: symbol, b: symbol)\n.decl e2(a: symbol, b: symbol)\n\
         .decl u0(a: symbol)\n.decl r0(a: symbol, b: symbol)\n.decl r1(a: symbol, b: symbol)\n\
         .decl r2(a: symbol, b: symbol)\n.input e0, e1, e2, u0\n.output r0, r1, r2\n",
    );
    let binary = ["e0", "e1", "e2", "r0", "r1", "r2"];
    for _ in 0..rng.gen_range(1..=5) {
        let head = format!("r{}", rng.gen_range(0..3));
        let mut body = Vec::new();
        let mut bound: Vec<&str> = Vec::new();
        for k in 0..rng.gen_range(1..=3) {
            // chain through an already bound variable most of the time
            let a = if k > 0 && rng.gen_bool(0.8) {
                *bound.choose(rng).unwrap()
            } else {
                *VARS.choose(rng).unwrap()
            };
            if rng.gen_bool(0.15) {
                body.push(format!("u0({a})"));
                bound.push(a);
                continue;
            }
            let rel = binary.choose(rng).unwrap();
            let b = if rng.gen_bool(0.1) {
                "\"a0\"".to_string()
            } else {
                VARS.choose(rng).unwrap().to_string()
            };
            body.push(format!("{rel}({a}, {b})"));
            bound.push(a);
            if let Some(v) = VARS.iter().find(|v| **v == b) {
                bound.push(v);
            }
        }
        let x = *bound.choose(rng).unwrap();
        let y = *bound.choose(rng).unwrap();
        let mut rule = format!("{head}({x}, {y}) :- {}", body.join(", "));
        if x != y && rng.gen_bool(0.2) {
            rule.push_str(&format!(", {x} != {y}"));
        }
        text.push_str(&rule);
        text.push_str(".\n");
    }
    parse_program(&text).expect("generated program is well formed")
}

/// A random program (or the behaviour-alteration bundle) with up to
/// `max_tuples` input tuples whose PCs use up to `max_features` features.
pub fn random_lifting_instance(seed: u64, max_features: usize, max_tuples: usize) -> Instance {
    let mut rng = rng(seed);
    let mut store = PcStore::new();
    let features = register_features(&mut store, rng.gen_range(1..=max_features));
    let program = if rng.gen_bool(0.25) {
        behaviour_alteration_program().program
    } else {
        random_program(&mut rng)
    };
    let domain: Vec<String> = (0..rng.gen_range(3..=12)).map(|i| format!("a{i}")).collect();
    let mut db = AnnotatedDatabase::new();
    let inputs: Vec<(String, usize)> = program.inputs().map(|d| (d.name.clone(), d.arity())).collect();
    for (name, arity) in &inputs {
        db.ensure_relation(name, *arity);
    }
    let n = rng.gen_range(0..=max_tuples);
    for _ in 0..n {
        let (name, arity) = inputs.choose(&mut rng).unwrap();
        let tuple: Vec<&str> = (0..*arity).map(|_| domain.choose(&mut rng).unwrap().as_str()).collect();
        let pc = random_pc(&mut rng, &mut store, &features, 0.3);
        let pc = match db.get(name, &tuple) {
            Some(old) => store.or(old, pc),
            None => pc,
        };
        db.insert(name, &tuple, pc);
    }
    Instance {
        program,
        db,
        store,
        planted: 0,
    }
}

/// Shape of a synthetic behaviour-alteration fact base.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadParams {
    pub tuples: usize,
    pub features: usize,
    /// Share of input facts carrying a non-trivial PC, in percent.
    pub variational_percent: f64,
    /// Contradictory join gadgets to plant; each drops exactly two derived
    /// tuples.
    pub gadgets: usize,
    pub components: usize,
    pub seed: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            tuples: 100_000,
            features: 500,
            variational_percent: 1.0,
            gadgets: 50,
            components: 20,
            seed: 1,
        }
    }
}

/// Facts for the behaviour-alteration bundle.
///
/// The background is a set of independent data-flow chains from a writer
/// function to a reader function. Background PCs are conjunctions of
/// positive literals, so no background join can be unsatisfiable. Each
/// gadget adds `varWrite(a, b) @ F` and `varWrite(b, c) @ !F` between a
/// write and a call decision in different components, which makes exactly
/// `transVarWrite(a, c)` and one `behAlter` tuple unsatisfiable.
pub fn behaviour_workload(params: &WorkloadParams) -> Instance {
    let mut rng = rng(params.seed);
    let mut store = PcStore::new();
    let features = register_features(&mut store, params.features.max(1));
    let program = behaviour_alteration_program().program;
    let mut db = AnnotatedDatabase::new();
    for d in program.inputs() {
        db.ensure_relation(&d.name, d.arity());
    }
    let components: Vec<String> = (0..params.components.max(2)).map(|i| format!("C{i}")).collect();
    let gadget_tuples = 6 * params.gadgets;
    let budget = params.tuples.saturating_sub(gadget_tuples);
    let variational = ((params.tuples as f64) * params.variational_percent / 100.0).floor() as usize;
    let mut background_variational = variational.saturating_sub(2 * params.gadgets);

    let mut count = 0;
    let mut module = 0;
    let mut chain_facts: Vec<(usize, usize)> = Vec::new();
    while count < budget {
        let len = rng.gen_range(1..=4).min(budget - count);
        let (f, g) = (format!("m{module}_w"), format!("m{module}_r"));
        let vars: Vec<String> = (0..=len).map(|i| format!("m{module}_v{i}")).collect();
        let rest = budget - count;
        // write, varWrite chain, varInfFunc, two cFunction rows
        if rest < len + 4 {
            for i in 0..rest {
                db.insert(edge_type::VAR_WRITE, &[&vars[0], &format!("m{module}_t{i}")], Pc::TRUE);
            }
            break;
        }
        db.insert(edge_type::WRITE, &[&f, &vars[0]], Pc::TRUE);
        for i in 0..len {
            db.insert(edge_type::VAR_WRITE, &[&vars[i], &vars[i + 1]], Pc::TRUE);
            chain_facts.push((module, i));
        }
        db.insert(edge_type::VAR_INF_FUNC, &[&vars[len], &g], Pc::TRUE);
        let c0 = components.choose(&mut rng).unwrap();
        let c1 = components.choose(&mut rng).unwrap();
        db.insert(edge_type::C_FUNCTION, &[&f, c0], Pc::TRUE);
        db.insert(edge_type::C_FUNCTION, &[&g, c1], Pc::TRUE);
        count += len + 4;
        module += 1;
    }
    chain_facts.shuffle(&mut rng);
    background_variational = background_variational.min(chain_facts.len());
    for &(m, i) in &chain_facts[..background_variational] {
        let k = rng.gen_range(1..=2);
        let lits = (0..k).map(|_| {
            let f = *features.choose(&mut rng).unwrap();
            store.var(f)
        });
        let lits: Vec<Pc> = lits.collect();
        let pc = store.and_all(lits);
        let (a, b) = (format!("m{m}_v{i}"), format!("m{m}_v{}", i + 1));
        db.insert(edge_type::VAR_WRITE, &[&a, &b], pc);
    }

    for k in 0..params.gadgets {
        let f = store.var(*features.choose(&mut rng).unwrap());
        let nf = store.not(f);
        let [a, b, c] = ["a", "b", "c"].map(|v| format!("g{k}_{v}"));
        let (wf, rf) = (format!("g{k}_w"), format!("g{k}_r"));
        let mut pair = components.choose_multiple(&mut rng, 2);
        let (ci, cj) = (pair.next().unwrap(), pair.next().unwrap());
        db.insert(edge_type::WRITE, &[&wf, &a], Pc::TRUE);
        db.insert(edge_type::VAR_WRITE, &[&a, &b], f);
        db.insert(edge_type::VAR_WRITE, &[&b, &c], nf);
        db.insert(edge_type::VAR_INF_FUNC, &[&c, &rf], Pc::TRUE);
        db.insert(edge_type::C_FUNCTION, &[&wf, ci], Pc::TRUE);
        db.insert(edge_type::C_FUNCTION, &[&rf, cj], Pc::TRUE);
    }
    Instance {
        program,
        db,
        store,
        planted: 2 * params.gadgets,
    }
}

/// Presence conditions of the ten-component example, one per
/// (writer component, reader component, pc) witness.
pub const TEN_COMPONENT_WITNESSES: &[(usize, usize, &str)] = &[
    (1, 2, "FA & !FB"),
    (1, 3, "FA"),
    (2, 3, "FC"),
    (2, 4, "FA & FC"),
    (3, 5, "true"),
    (3, 6, "!FB & FD"),
    (4, 1, "FB"),
    (4, 7, "FA & !FB & FC"),
    (5, 6, "FE | FF"),
    (5, 8, "!FA"),
    (6, 9, "FG & FH"),
    (6, 9, "FA & !FB"),
    (7, 10, "FI"),
    (7, 2, "FJ & !FK"),
    (8, 10, "FL | (FA & FC)"),
    (9, 1, "!FC"),
    (9, 10, "FA | FB"),
    (10, 3, "FD & FE & FF"),
    (10, 5, "FA & FK"),
    (2, 7, "FB & !FB"),
];

/// Feature names of the ten-component example in registration order.
pub const TEN_COMPONENT_FEATURES: [&str; 12] = ["FA", "FB", "FC", "FD", "FE", "FF", "FG", "FH", "FI", "FJ", "FK", "FL"];

/// A fact graph with components `C1`..`C10` whose behaviour-alteration
/// results are the witnesses above; the last one is contradictory and
/// yields nothing.
pub fn ten_component_graph(store: &mut PcStore) -> FactGraph {
    for f in TEN_COMPONENT_FEATURES {
        store.register(f, FeatureOrigin::DeclaredBoolean);
    }
    let mut g = FactGraph::new();
    for c in 1..=10 {
        g.add_node(format!("C{c}"), NodeKind::Component).unwrap();
    }
    for (k, (from, to, pc)) in TEN_COMPONENT_WITNESSES.iter().enumerate() {
        let file = format!("c{from}.c");
        let (w, v, r) = (format!("{file}#w{k}"), format!("{file}#v{k}"), format!("c{to}.c#r{k}"));
        let tmp = format!("{file}#t{k}");
        g.add_node(w.clone(), NodeKind::Function).unwrap();
        g.add_node(r.clone(), NodeKind::Function).unwrap();
        g.add_node(v.clone(), NodeKind::Variable).unwrap();
        g.add_node(tmp.clone(), NodeKind::Variable).unwrap();
        let pc = store.parse(pc).unwrap();
        let edges = [
            (Edge::new(edge_type::WRITE, w.clone(), v.clone()), Pc::TRUE),
            (Edge::new(edge_type::VAR_WRITE, v, tmp.clone()), pc),
            (Edge::new(edge_type::VAR_INF_FUNC, tmp, r.clone()), Pc::TRUE),
            (Edge::new(edge_type::C_FUNCTION, w, format!("C{from}")), Pc::TRUE),
            (Edge::new(edge_type::C_FUNCTION, r, format!("C{to}")), Pc::TRUE),
        ];
        for (e, pc) in edges {
            g.add_edge(e.clone()).unwrap();
            if !pc.is_true() {
                g.set_edge_attr(&e, PC_KEY, store.render(pc)).unwrap();
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_tables() {
        let f = [FeatureId(0), FeatureId(1)];
        let a_and_not_b = FeatureExpr::and(FeatureExpr::Var(f[0]), FeatureExpr::not(FeatureExpr::Var(f[1])));
        // configurations 0..4: {}, {F0}, {F1}, {F0,F1}
        assert_eq!(truth_table(&a_and_not_b, 2), vec![0b0010]);
        assert_eq!(truth_table(&FeatureExpr::True, 2), vec![0b1111]);
        assert_eq!(truth_table(&FeatureExpr::Var(f[1]), 7).len(), 2);
    }

    #[test]
    fn workload_shape() {
        let p = WorkloadParams {
            tuples: 2000,
            features: 20,
            variational_percent: 1.0,
            gadgets: 3,
            components: 5,
            seed: 7,
        };
        let inst = behaviour_workload(&p);
        assert_eq!(inst.db.tuple_count(), 2000);
        let variational = inst
            .db
            .relations
            .values()
            .flat_map(|r| r.tuples.values())
            .filter(|pc| !pc.is_true())
            .count();
        assert_eq!(variational, 20);
        assert_eq!(inst.planted, 6);
        let again = behaviour_workload(&p);
        assert_eq!(inst.db.contents(), again.db.contents());
    }

    #[test]
    fn random_instances_are_deterministic() {
        let a = random_lifting_instance(3, 8, 200);
        let b = random_lifting_instance(3, 8, 200);
        assert_eq!(a.db.contents(), b.db.contents());
        assert_eq!(a.program.rules, b.program.rules);
        assert!(a.db.tuple_count() <= 200);
    }

    #[test]
    fn random_graphs_emit() {
        for seed in 0..20 {
            let mut store = PcStore::new();
            let g = random_fact_graph(&mut rng(seed), &mut store);
            crate::tamodel::emit_ta(&g).unwrap();
        }
    }
}
