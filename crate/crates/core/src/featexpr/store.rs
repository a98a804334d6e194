//! Reduced ordered binary decision diagrams holding presence conditions.
//!
//! Every [`Pc`] is an index into one store's node table. Nodes are hash-consed
//! and reduced, so two handles are equal exactly when their functions are.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::expr::{parse_feature_expr, FeatureExpr, FeatureId, FeatureOrigin, FeatureRegistry};
use super::{Configuration, FeatureExprError};

/// Handle to a canonical presence condition inside a [`PcStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pc(u32);

impl Pc {
    pub const FALSE: Pc = Pc(0);
    pub const TRUE: Pc = Pc(1);

    pub fn is_true(self) -> bool {
        self == Pc::TRUE
    }

    pub fn is_false(self) -> bool {
        self == Pc::FALSE
    }

    fn is_terminal(self) -> bool {
        self.0 < 2
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: Pc,
    hi: Pc,
}

static NEXT_STORE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
}

/// Node table, unique table and operation caches for one analysis run.
///
/// The variable order is the feature registration order and never changes.
#[derive(Debug)]
pub struct PcStore {
    id: u64,
    features: FeatureRegistry,
    nodes: Vec<Node>,
    unique: HashMap<Node, Pc>,
    apply_cache: HashMap<(Op, Pc, Pc), Pc>,
    not_cache: HashMap<Pc, Pc>,
}

impl Default for PcStore {
    fn default() -> Self {
        Self::new()
    }
}

impl Clone for PcStore {
    /// Clones get a fresh store id: handles are shared by value but the
    /// stores diverge from here on.
    fn clone(&self) -> Self {
        PcStore {
            id: NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed),
            features: self.features.clone(),
            nodes: self.nodes.clone(),
            unique: self.unique.clone(),
            apply_cache: self.apply_cache.clone(),
            not_cache: self.not_cache.clone(),
        }
    }
}

impl PcStore {
    pub fn new() -> Self {
        Self::with_registry(FeatureRegistry::new())
    }

    pub fn with_registry(features: FeatureRegistry) -> Self {
        let terminal = |v| Node {
            var: TERMINAL_VAR,
            lo: Pc(v),
            hi: Pc(v),
        };
        PcStore {
            id: NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed),
            features,
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
        }
    }

    /// Forgets memoised operation results. Handles stay valid.
    pub fn clear_caches(&mut self) {
        self.apply_cache.clear();
        self.not_cache.clear();
    }

    /// Process-unique identity, used to detect handles from a foreign store.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn features(&self) -> &FeatureRegistry {
        &self.features
    }

    pub fn features_mut(&mut self) -> &mut FeatureRegistry {
        &mut self.features
    }

    pub fn register(&mut self, name: &str, origin: FeatureOrigin) -> FeatureId {
        self.features.register(name, origin)
    }

    /// Number of internal (non-terminal) nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn constant(&self, value: bool) -> Pc {
        if value {
            Pc::TRUE
        } else {
            Pc::FALSE
        }
    }

    fn mk(&mut self, var: u32, lo: Pc, hi: Pc) -> Pc {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&pc) = self.unique.get(&node) {
            return pc;
        }
        let pc = Pc(self.nodes.len() as u32);
        self.nodes.push(node);
        self.unique.insert(node, pc);
        pc
    }

    fn node(&self, pc: Pc) -> Node {
        self.nodes[pc.idx()]
    }

    fn var_of(&self, pc: Pc) -> u32 {
        self.nodes[pc.idx()].var
    }

    /// The single-variable function for `feature`.
    pub fn var(&mut self, feature: FeatureId) -> Pc {
        assert!(
            feature.index() < self.features.len(),
            "feature {feature:?} is not registered in this store"
        );
        self.mk(feature.0, Pc::FALSE, Pc::TRUE)
    }

    pub fn not(&mut self, a: Pc) -> Pc {
        match a {
            Pc::TRUE => return Pc::FALSE,
            Pc::FALSE => return Pc::TRUE,
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return r;
        }
        let n = self.node(a);
        let lo = self.not(n.lo);
        let hi = self.not(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.not_cache.insert(a, r);
        self.not_cache.insert(r, a);
        r
    }

    pub fn and(&mut self, a: Pc, b: Pc) -> Pc {
        self.apply(Op::And, a, b)
    }

    pub fn or(&mut self, a: Pc, b: Pc) -> Pc {
        self.apply(Op::Or, a, b)
    }

    /// `a ∧ ¬b`
    pub fn and_not(&mut self, a: Pc, b: Pc) -> Pc {
        if a.is_false() || b.is_true() || a == b {
            return Pc::FALSE;
        }
        let nb = self.not(b);
        self.and(a, nb)
    }

    fn apply(&mut self, op: Op, a: Pc, b: Pc) -> Pc {
        // terminal cases
        match op {
            Op::And => {
                if a.is_false() || b.is_false() {
                    return Pc::FALSE;
                }
                if a.is_true() || a == b {
                    return b;
                }
                if b.is_true() {
                    return a;
                }
            }
            Op::Or => {
                if a.is_true() || b.is_true() {
                    return Pc::TRUE;
                }
                if a.is_false() || a == b {
                    return b;
                }
                if b.is_false() {
                    return a;
                }
            }
        }
        // commutative: normalise the cache key
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if let Some(&r) = self.apply_cache.get(&(op, a, b)) {
            return r;
        }
        let (na, nb) = (self.node(a), self.node(b));
        let var = na.var.min(nb.var);
        let (alo, ahi) = if na.var == var { (na.lo, na.hi) } else { (a, a) };
        let (blo, bhi) = if nb.var == var { (nb.lo, nb.hi) } else { (b, b) };
        let lo = self.apply(op, alo, blo);
        let hi = self.apply(op, ahi, bhi);
        let r = self.mk(var, lo, hi);
        self.apply_cache.insert((op, a, b), r);
        r
    }

    pub fn and_all(&mut self, pcs: impl IntoIterator<Item = Pc>) -> Pc {
        let mut acc = Pc::TRUE;
        for pc in pcs {
            acc = self.and(acc, pc);
            if acc.is_false() {
                break;
            }
        }
        acc
    }

    pub fn or_all(&mut self, pcs: impl IntoIterator<Item = Pc>) -> Pc {
        let mut acc = Pc::FALSE;
        for pc in pcs {
            acc = self.or(acc, pc);
        }
        acc
    }

    pub fn is_sat(&self, pc: Pc) -> bool {
        !pc.is_false()
    }

    /// Whether `a ∧ ¬b` is unsatisfiable. Read-only: no nodes are created.
    pub fn implies(&self, a: Pc, b: Pc) -> bool {
        let mut memo = HashMap::new();
        self.implies_rec(a, b, &mut memo)
    }

    fn implies_rec(&self, a: Pc, b: Pc, memo: &mut HashMap<(Pc, Pc), bool>) -> bool {
        if a.is_false() || b.is_true() || a == b {
            return true;
        }
        if a.is_true() && b.is_false() {
            return false;
        }
        if let Some(&r) = memo.get(&(a, b)) {
            return r;
        }
        let var = self.var_of(a).min(self.var_of(b));
        let (alo, ahi) = self.cofactors(a, var);
        let (blo, bhi) = self.cofactors(b, var);
        let r = self.implies_rec(alo, blo, memo) && self.implies_rec(ahi, bhi, memo);
        memo.insert((a, b), r);
        r
    }

    fn cofactors(&self, pc: Pc, var: u32) -> (Pc, Pc) {
        let n = self.node(pc);
        if !pc.is_terminal() && n.var == var {
            (n.lo, n.hi)
        } else {
            (pc, pc)
        }
    }

    /// Restricts `pc` to the total assignment `rho` and returns the resulting constant.
    pub fn eval(&self, pc: Pc, rho: &Configuration) -> bool {
        let mut cur = pc;
        while !cur.is_terminal() {
            let n = self.node(cur);
            cur = if rho.is_present(FeatureId(n.var)) { n.hi } else { n.lo };
        }
        cur.is_true()
    }

    /// Canonical handle of `expr`.
    pub fn to_pc(&mut self, expr: &FeatureExpr) -> Pc {
        match expr {
            FeatureExpr::True => Pc::TRUE,
            FeatureExpr::False => Pc::FALSE,
            FeatureExpr::Var(id) => self.var(*id),
            FeatureExpr::Not(e) => {
                let p = self.to_pc(e);
                self.not(p)
            }
            FeatureExpr::And(a, b) => {
                let pa = self.to_pc(a);
                if pa.is_false() {
                    return Pc::FALSE;
                }
                let pb = self.to_pc(b);
                self.and(pa, pb)
            }
            FeatureExpr::Or(a, b) => {
                let pa = self.to_pc(a);
                if pa.is_true() {
                    return Pc::TRUE;
                }
                let pb = self.to_pc(b);
                self.or(pa, pb)
            }
        }
    }

    /// Parses and interns `text` against this store's registry.
    pub fn parse(&mut self, text: &str) -> Result<Pc, FeatureExprError> {
        let expr = parse_feature_expr(text, &mut self.features)?;
        Ok(self.to_pc(&expr))
    }

    /// Features the function actually depends on, in variable order.
    pub fn support(&self, pc: Pc) -> Vec<FeatureId> {
        let mut seen = std::collections::HashSet::new();
        let mut vars = std::collections::BTreeSet::new();
        let mut stack = vec![pc];
        while let Some(p) = stack.pop() {
            if p.is_terminal() || !seen.insert(p) {
                continue;
            }
            let n = self.node(p);
            vars.insert(n.var);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        vars.into_iter().map(FeatureId).collect()
    }

    /// All root-to-true paths as partial assignments (disjoint cubes).
    pub(crate) fn paths(&self, pc: Pc) -> Vec<Vec<(FeatureId, bool)>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.paths_rec(pc, &mut cur, &mut out);
        out
    }

    fn paths_rec(&self, pc: Pc, cur: &mut Vec<(FeatureId, bool)>, out: &mut Vec<Vec<(FeatureId, bool)>>) {
        if pc.is_false() {
            return;
        }
        if pc.is_true() {
            out.push(cur.clone());
            return;
        }
        let n = self.node(pc);
        cur.push((FeatureId(n.var), false));
        self.paths_rec(n.lo, cur, out);
        cur.pop();
        cur.push((FeatureId(n.var), true));
        self.paths_rec(n.hi, cur, out);
        cur.pop();
    }
}

/// Number of distinct handles, not counting constant true.
pub fn count_unique_pcs(pcs: impl IntoIterator<Item = Pc>) -> usize {
    let set: std::collections::HashSet<Pc> = pcs.into_iter().filter(|p| !p.is_true()).collect();
    set.len()
}
