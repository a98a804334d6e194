//! Semi-naive evaluation generic over the annotation algebra.
//!
//! A derivation's annotation is the conjunction of its body annotations.
//! Inserting `d` into a tuple holding `e` stores `e | d`; the tuple re-enters
//! the delta with `d & !e` when that is non-zero. Matches whose running
//! conjunction becomes zero still complete the join and are stored with a
//! zero annotation ("ghost" rows); ghosts are removed and counted at the
//! end, so the lifted run visits exactly the tuples of the unannotated run.

use std::collections::HashMap;
use std::fmt::Debug;

use indexmap::IndexMap;

use super::EngineError;
use crate::datalog::{CmpOp, Database, Program, Relation, Rule, Sym, SymbolTable, Term};
use crate::featexpr::{Pc, PcStore};

pub(crate) trait Algebra {
    type V: Copy + Eq + Debug;
    fn one(&self) -> Self::V;
    fn zero(&self) -> Self::V;
    fn is_zero(&mut self, v: Self::V) -> bool;
    fn and(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn or(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn and_not(&mut self, a: Self::V, b: Self::V) -> Self::V;
}

pub(crate) struct Ground;

impl Algebra for Ground {
    type V = bool;
    fn one(&self) -> bool {
        true
    }
    fn zero(&self) -> bool {
        false
    }
    fn is_zero(&mut self, v: bool) -> bool {
        !v
    }
    fn and(&mut self, a: bool, b: bool) -> bool {
        a && b
    }
    fn or(&mut self, a: bool, b: bool) -> bool {
        a || b
    }
    fn and_not(&mut self, a: bool, b: bool) -> bool {
        a && !b
    }
}

pub(crate) struct Lifted<'s> {
    pub store: &'s mut PcStore,
    /// When set, zero means unsatisfiable together with this condition.
    pub within: Option<Pc>,
}

impl Algebra for Lifted<'_> {
    type V = Pc;
    fn one(&self) -> Pc {
        Pc::TRUE
    }
    fn zero(&self) -> Pc {
        Pc::FALSE
    }
    fn is_zero(&mut self, v: Pc) -> bool {
        match self.within {
            _ if v.is_false() => true,
            Some(fm) => self.store.and(v, fm).is_false(),
            None => false,
        }
    }
    fn and(&mut self, a: Pc, b: Pc) -> Pc {
        self.store.and(a, b)
    }
    fn or(&mut self, a: Pc, b: Pc) -> Pc {
        self.store.or(a, b)
    }
    fn and_not(&mut self, a: Pc, b: Pc) -> Pc {
        self.store.and_not(a, b)
    }
}

pub(crate) struct Outcome<V> {
    pub db: Database<V>,
    /// Rounds per stratum, in stratum order.
    pub iterations: Vec<usize>,
    /// Ghost rows removed from derived relations.
    pub ghosts: usize,
}

#[derive(Clone, Copy)]
enum Key {
    Const(Sym),
    Var(usize),
}

struct AtomPlan {
    rel: usize,
    /// Columns looked up through an index, and where their values come from.
    key_cols: Vec<usize>,
    key: Vec<Key>,
    /// First occurrences of variables in this atom.
    binds: Vec<(usize, usize)>,
    /// Repeated variables within this atom: column must equal the variable.
    same: Vec<(usize, usize)>,
    /// Constraints fully bound once this atom has matched.
    checks: Vec<usize>,
}

struct CompiledRule {
    head_rel: usize,
    head: Vec<Key>,
    atoms: Vec<AtomPlan>,
    constraints: Vec<(Key, CmpOp, Key)>,
    /// Ground constraints, checked before any join.
    pre_checks: Vec<usize>,
    nvars: usize,
}

fn compile(rule: &Rule, symbols: &mut SymbolTable) -> CompiledRule {
    let mut key_of = |t: &Term| match t {
        Term::Var(v) => Key::Var(*v),
        Term::Const(c) => Key::Const(symbols.intern(c)),
    };
    let mut bound = vec![false; rule.variables.len()];
    let mut atoms = Vec::new();
    for a in &rule.body {
        let mut plan = AtomPlan {
            rel: a.relation,
            key_cols: Vec::new(),
            key: Vec::new(),
            binds: Vec::new(),
            same: Vec::new(),
            checks: Vec::new(),
        };
        for (col, t) in a.terms.iter().enumerate() {
            match t {
                Term::Var(v) if !bound[*v] => {
                    if let Some(&(_, _)) = plan.binds.iter().find(|(_, bv)| bv == v) {
                        plan.same.push((col, *v));
                    } else {
                        plan.binds.push((col, *v));
                    }
                }
                _ => {
                    plan.key_cols.push(col);
                    plan.key.push(key_of(t));
                }
            }
        }
        for &(_, v) in &plan.binds {
            bound[v] = true;
        }
        atoms.push(plan);
    }
    let constraints: Vec<_> = rule
        .constraints
        .iter()
        .map(|c| (key_of(&c.lhs), c.op, key_of(&c.rhs)))
        .collect();
    let mut pre_checks = Vec::new();
    for (ci, (l, _, r)) in constraints.iter().enumerate() {
        let ready = [l, r]
            .iter()
            .filter_map(|k| match k {
                Key::Var(v) => Some(
                    atoms
                        .iter()
                        .position(|a| a.binds.iter().any(|(_, bv)| bv == v))
                        .unwrap(),
                ),
                Key::Const(_) => None,
            })
            .max();
        match ready {
            Some(i) => atoms[i].checks.push(ci),
            None => pre_checks.push(ci),
        }
    }
    CompiledRule {
        head_rel: rule.head.relation,
        head: rule.head.terms.iter().map(&mut key_of).collect(),
        atoms,
        constraints,
        pre_checks,
        nvars: rule.variables.len(),
    }
}

type Index = HashMap<Vec<Sym>, Vec<u32>>;

/// Tuples derived for one relation in a round.
type Derivations<V> = (usize, Vec<(Vec<Sym>, V)>);

struct Work<V> {
    tuples: IndexMap<Vec<Sym>, V>,
    indexes: HashMap<Vec<usize>, Index>,
}

impl<V> Work<V> {
    fn ensure_index(&mut self, cols: &[usize]) {
        if cols.is_empty() || self.indexes.contains_key(cols) {
            return;
        }
        let mut idx = Index::new();
        for (pos, t) in self.tuples.keys().enumerate() {
            idx.entry(cols.iter().map(|&c| t[c]).collect())
                .or_default()
                .push(pos as u32);
        }
        self.indexes.insert(cols.to_vec(), idx);
    }
}

/// Where the atom under the cursor reads from.
enum Source<'a, V> {
    Full,
    /// Delta entries (position in the full relation, delta annotation),
    /// optionally indexed on the atom's key columns.
    Delta(&'a [(u32, V)], Option<&'a HashMap<Vec<Sym>, Vec<usize>>>),
}

struct Evaluator<'a, A: Algebra> {
    alg: &'a mut A,
    rels: Vec<Work<A::V>>,
}

impl<A: Algebra> Evaluator<'_, A> {
    fn check(&self, rule: &CompiledRule, ci: usize, vals: &[Sym]) -> bool {
        let (l, op, r) = rule.constraints[ci];
        let get = |k: Key| match k {
            Key::Const(s) => s,
            Key::Var(v) => vals[v],
        };
        (get(l) == get(r)) == (op == CmpOp::Eq)
    }

    #[allow(clippy::too_many_arguments)]
    fn join(
        &mut self,
        rule: &CompiledRule,
        i: usize,
        delta_at: Option<usize>,
        delta: &Source<'_, A::V>,
        vals: &mut Vec<Sym>,
        acc: A::V,
        out: &mut Vec<(Vec<Sym>, A::V)>,
    ) {
        if i == rule.atoms.len() {
            let head = rule
                .head
                .iter()
                .map(|k| match *k {
                    Key::Const(s) => s,
                    Key::Var(v) => vals[v],
                })
                .collect();
            out.push((head, acc));
            return;
        }
        let plan = &rule.atoms[i];
        let key: Vec<Sym> = plan
            .key
            .iter()
            .map(|k| match *k {
                Key::Const(s) => s,
                Key::Var(v) => vals[v],
            })
            .collect();
        // candidate (position, annotation) pairs
        let candidates: Vec<(u32, A::V)> = if delta_at == Some(i) {
            let Source::Delta(entries, index) = delta else {
                unreachable!()
            };
            match index {
                Some(idx) => idx
                    .get(&key)
                    .map(|ps| ps.iter().map(|&p| entries[p]).collect())
                    .unwrap_or_default(),
                None => entries.to_vec(),
            }
        } else {
            let rel = &self.rels[plan.rel];
            let positions: Vec<u32> = if plan.key_cols.is_empty() {
                (0..rel.tuples.len() as u32).collect()
            } else {
                rel.indexes[&plan.key_cols].get(&key).cloned().unwrap_or_default()
            };
            positions
                .into_iter()
                .map(|p| (p, *rel.tuples.get_index(p as usize).unwrap().1))
                .collect()
        };
        let zero = self.alg.zero();
        for (pos, v) in candidates {
            let tuple = self.rels[plan.rel].tuples.get_index(pos as usize).unwrap().0.clone();
            for &(col, var) in &plan.binds {
                vals[var] = tuple[col];
            }
            if plan.same.iter().any(|&(col, var)| tuple[col] != vals[var]) {
                continue;
            }
            if plan.checks.iter().any(|&ci| !self.check(rule, ci, vals)) {
                continue;
            }
            // once the conjunction is zero, skip further algebra work
            let next = if acc == zero {
                zero
            } else {
                let c = self.alg.and(acc, v);
                if self.alg.is_zero(c) {
                    zero
                } else {
                    c
                }
            };
            self.join(rule, i + 1, delta_at, delta, vals, next, out);
        }
    }

    /// Merges derivations; returns the per-relation delta.
    fn insert(&mut self, derived: Vec<Derivations<A::V>>) -> HashMap<usize, IndexMap<u32, A::V>> {
        let mut delta: HashMap<usize, IndexMap<u32, A::V>> = HashMap::new();
        for (rel, rows) in derived {
            for (t, d) in rows {
                let work = &mut self.rels[rel];
                match work.tuples.get_full_mut(&t) {
                    None => {
                        let pos = work.tuples.len() as u32;
                        for (cols, idx) in work.indexes.iter_mut() {
                            idx.entry(cols.iter().map(|&c| t[c]).collect()).or_default().push(pos);
                        }
                        work.tuples.insert(t, d);
                        // new tuples always enter the delta, ghosts included
                        delta.entry(rel).or_default().insert(pos, d);
                    }
                    Some((pos, _, e)) => {
                        let e = *e;
                        if d == self.alg.zero() {
                            continue;
                        }
                        let merged = self.alg.or(e, d);
                        let fresh = self.alg.and_not(d, e);
                        self.rels[rel].tuples[pos] = merged;
                        if !self.alg.is_zero(fresh) {
                            let slot = delta.entry(rel).or_default().entry(pos as u32).or_insert(fresh);
                            if *slot != fresh {
                                *slot = self.alg.or(*slot, fresh);
                            }
                        }
                    }
                }
            }
        }
        delta
    }
}

pub(crate) fn run<A: Algebra>(p: &Program, input: &Database<A::V>, alg: &mut A) -> Result<Outcome<A::V>, EngineError> {
    for d in p.inputs() {
        match input.relation(&d.name) {
            None => return Err(EngineError::MissingInput(d.name.clone())),
            Some(r) if r.arity != d.arity() && !r.is_empty() => {
                return Err(EngineError::ArityMismatch {
                    relation: d.name.clone(),
                    expected: d.arity(),
                    found: r.arity,
                })
            }
            _ => {}
        }
    }
    let mut symbols = input.symbols.clone();
    let rules: Vec<CompiledRule> = p.rules.iter().map(|r| compile(r, &mut symbols)).collect();
    let mut rels: Vec<Work<A::V>> = Vec::with_capacity(p.decls.len());
    for d in &p.decls {
        let mut tuples = IndexMap::new();
        if let Some(r) = input.relation(&d.name) {
            for (t, v) in &r.tuples {
                if !alg.is_zero(*v) {
                    tuples.insert(t.clone(), *v);
                }
            }
        }
        rels.push(Work {
            tuples,
            indexes: HashMap::new(),
        });
    }
    let mut ev = Evaluator { alg, rels };
    let mut iterations = Vec::new();

    for stratum in &p.strata {
        let in_stratum = |r: usize| stratum.relations.contains(&r);
        for &ri in &stratum.rules {
            for a in &rules[ri].atoms {
                ev.rels[a.rel].ensure_index(&a.key_cols);
            }
        }
        let recursive = stratum
            .rules
            .iter()
            .any(|&ri| rules[ri].atoms.iter().any(|a| in_stratum(a.rel)));

        let mut derived = Vec::new();
        for &ri in &stratum.rules {
            let rule = &rules[ri];
            if !rule.pre_checks.iter().all(|&ci| ev.check(rule, ci, &[])) {
                continue;
            }
            let mut out = Vec::new();
            let one = ev.alg.one();
            ev.join(
                rule,
                0,
                None,
                &Source::Full,
                &mut vec![Sym(0); rule.nvars],
                one,
                &mut out,
            );
            derived.push((rule.head_rel, out));
        }
        let mut delta = ev.insert(derived);
        let mut rounds = 1;

        while recursive && delta.values().any(|d| !d.is_empty()) {
            let current: HashMap<usize, Vec<(u32, A::V)>> =
                delta.into_iter().map(|(r, d)| (r, d.into_iter().collect())).collect();
            let mut derived = Vec::new();
            for &ri in &stratum.rules {
                let rule = &rules[ri];
                if !rule.pre_checks.iter().all(|&ci| ev.check(rule, ci, &[])) {
                    continue;
                }
                for (i, a) in rule.atoms.iter().enumerate() {
                    let Some(entries) = current.get(&a.rel).filter(|e| !e.is_empty() && in_stratum(a.rel)) else {
                        continue;
                    };
                    let index = (!a.key_cols.is_empty()).then(|| {
                        let mut idx: HashMap<Vec<Sym>, Vec<usize>> = HashMap::new();
                        for (k, (pos, _)) in entries.iter().enumerate() {
                            let t = ev.rels[a.rel].tuples.get_index(*pos as usize).unwrap().0;
                            idx.entry(a.key_cols.iter().map(|&c| t[c]).collect())
                                .or_default()
                                .push(k);
                        }
                        idx
                    });
                    let src = Source::Delta(entries, index.as_ref());
                    let mut out = Vec::new();
                    let one = ev.alg.one();
                    ev.join(rule, 0, Some(i), &src, &mut vec![Sym(0); rule.nvars], one, &mut out);
                    derived.push((rule.head_rel, out));
                }
            }
            delta = ev.insert(derived);
            rounds += 1;
        }
        iterations.push(rounds);
    }

    let derived_rels: Vec<usize> = p.strata.iter().flat_map(|s| s.relations.iter().copied()).collect();
    let mut ghosts = 0;
    let mut out = Database {
        symbols,
        relations: input.relations.clone(),
    };
    for (ri, work) in ev.rels.into_iter().enumerate() {
        let decl = &p.decls[ri];
        let mut tuples = work.tuples;
        if derived_rels.contains(&ri) {
            let before = tuples.len();
            tuples.retain(|_, v| !ev.alg.is_zero(*v));
            ghosts += before - tuples.len();
        }
        out.relations.insert(
            decl.name.clone(),
            Relation {
                arity: decl.arity(),
                tuples,
            },
        );
    }
    Ok(Outcome {
        db: out,
        iterations,
        ghosts,
    })
}
