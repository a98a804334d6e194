//! Fact extraction with presence-condition tracking.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::config::{ExtractionConfig, FeatureType};
use super::ExtractError;
use crate::factgraph::{edge_type, Edge, FactGraph, NodeKind, PC_KEY};
use crate::featexpr::{
    abstract_comparison, CompareOp, FeatureExpr, FeatureId, FeatureOrigin, FeatureRegistry, Pc, PcStore,
};

/// A global recognised as a feature variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureVar {
    Bool(FeatureId),
    Enum { enum_name: String },
}

/// Feature variables by source name, with the features they introduced.
#[derive(Clone, Debug, Default)]
pub struct FeatureSet {
    vars: BTreeMap<String, FeatureVar>,
    registered: Vec<FeatureId>,
}

impl FeatureSet {
    pub fn get(&self, name: &str) -> Option<&FeatureVar> {
        self.vars.get(name)
    }

    pub fn variables(&self) -> impl Iterator<Item = (&str, &FeatureVar)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Features registered during recognition, in registration order.
    pub fn features(&self) -> &[FeatureId] {
        &self.registered
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

fn qualifies(v: &VarDecl, cfg: &ExtractionConfig) -> bool {
    if !(v.is_const || v.is_extern) || !cfg.feature_regex.is_match(&v.name) {
        return false;
    }
    match v.ty {
        Type::Bool => cfg.accepts(FeatureType::ConstBoolGlobal),
        Type::Enum(_) => cfg.accepts(FeatureType::EnumGlobal),
        Type::Int | Type::Void => false,
    }
}

/// Decides which globals are feature variables and registers their features.
///
/// Enum-typed feature variables register every literal of their enum;
/// comparison features are registered later, on first use.
pub fn recognize_features(
    units: &[TranslationUnit],
    cfg: &ExtractionConfig,
    registry: &mut FeatureRegistry,
) -> FeatureSet {
    let mut enums: HashMap<&str, &EnumDecl> = HashMap::new();
    for u in units {
        for item in &u.items {
            if let Item::Enum(e) = item {
                enums.entry(e.name.as_str()).or_insert(e);
            }
        }
    }
    let mut set = FeatureSet::default();
    for u in units {
        for item in &u.items {
            let Item::Var(v) = item else { continue };
            if set.vars.contains_key(&v.name) || !qualifies(v, cfg) {
                continue;
            }
            match &v.ty {
                Type::Bool => {
                    let id = registry.register(&v.name, FeatureOrigin::DeclaredBoolean);
                    set.registered.push(id);
                    set.vars.insert(v.name.clone(), FeatureVar::Bool(id));
                }
                Type::Enum(name) => {
                    if let Some(e) = enums.get(name.as_str()) {
                        for (lit, _) in &e.literals {
                            let id = registry.register(lit, FeatureOrigin::EnumLiteral);
                            set.registered.push(id);
                        }
                    }
                    set.vars.insert(
                        v.name.clone(),
                        FeatureVar::Enum {
                            enum_name: name.clone(),
                        },
                    );
                }
                _ => unreachable!(),
            }
        }
    }
    set
}

/// One source-level occurrence of an extracted edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactOccurrence {
    pub edge: Edge,
    pub file: String,
    pub pos: Pos,
    pub pc: Pc,
}

#[derive(Debug)]
pub struct Extraction {
    pub graph: FactGraph,
    /// Every emission site, in walk order. An edge's PC in the graph is the
    /// disjunction of its occurrences' PCs.
    pub occurrences: Vec<FactOccurrence>,
}

impl Extraction {
    pub fn occurrences_at(&self, file: &str, line: u32) -> impl Iterator<Item = &FactOccurrence> {
        let file = file.to_string();
        self.occurrences
            .iter()
            .filter(move |o| o.file == file && o.pos.line == line)
    }
}

#[derive(Clone, Debug)]
struct FuncRef {
    node: String,
    params: Option<Vec<String>>,
}

#[derive(Default)]
struct Index {
    globals: HashMap<String, String>,
    functions: HashMap<String, FuncRef>,
    function_owner: HashMap<String, usize>,
    enum_literals: HashSet<String>,
}

fn build_index(units: &[TranslationUnit], features: &FeatureSet) -> Index {
    let mut idx = Index::default();
    // definitions first, then declarations for names left undefined
    for pass in 0..2 {
        for (ui, u) in units.iter().enumerate() {
            for item in &u.items {
                match item {
                    Item::Var(v) if features.get(&v.name).is_none() => {
                        let is_def = !v.is_extern;
                        if (pass == 0) == is_def && !idx.globals.contains_key(&v.name) {
                            idx.globals.insert(v.name.clone(), format!("{}#{}", u.path, v.name));
                        }
                    }
                    Item::Func(f) => {
                        let is_def = f.body.is_some();
                        if (pass == 0) == is_def && !idx.functions.contains_key(&f.name) {
                            let node = format!("{}#{}", u.path, f.name);
                            let params =
                                is_def.then(|| f.params.iter().map(|p| format!("{node}#{}", p.name)).collect());
                            idx.functions.insert(f.name.clone(), FuncRef { node, params });
                            idx.function_owner.insert(f.name.clone(), ui);
                        }
                    }
                    Item::Enum(e) if pass == 0 => {
                        idx.enum_literals.extend(e.literals.iter().map(|(l, _)| l.clone()));
                    }
                    _ => {}
                }
            }
        }
    }
    idx
}

#[derive(Default)]
struct Builder {
    nodes: BTreeMap<String, (NodeKind, Pc)>,
    edges: BTreeMap<Edge, Pc>,
    occurrences: Vec<FactOccurrence>,
}

enum Resolved<'a> {
    Node(String),
    Feature(&'a FeatureVar),
    EnumLiteral,
    Unknown,
}

struct ClassScope {
    vars: HashMap<String, String>,
    funcs: HashMap<String, FuncRef>,
}

struct Walker<'a> {
    store: &'a mut PcStore,
    index: &'a Index,
    features: &'a FeatureSet,
    out: &'a mut Builder,
    file: &'a str,
    class: Option<ClassScope>,
    func: Option<String>,
    used_ids: HashSet<String>,
    scopes: Vec<HashMap<String, String>>,
    pc: Pc,
    guards: Vec<Vec<String>>,
}

/// Extracts the fact graph of `units`, annotating facts with presence
/// conditions interned in `store`.
pub fn extract(
    units: &[TranslationUnit],
    cfg: &ExtractionConfig,
    features: &FeatureSet,
    store: &mut PcStore,
) -> Result<Extraction, ExtractError> {
    let index = build_index(units, features);
    let mut out = Builder::default();
    for (ui, unit) in units.iter().enumerate() {
        let mut w = Walker {
            store: &mut *store,
            index: &index,
            features,
            out: &mut out,
            file: &unit.path,
            class: None,
            func: None,
            used_ids: HashSet::new(),
            scopes: Vec::new(),
            pc: Pc::TRUE,
            guards: Vec::new(),
        };
        w.unit(ui, unit, cfg.component_of(&unit.path));
    }
    assemble(out, store)
}

fn assemble(out: Builder, store: &PcStore) -> Result<Extraction, ExtractError> {
    let mut graph = FactGraph::new();
    for (id, (kind, _)) in &out.nodes {
        graph.add_node(id.clone(), *kind)?;
    }
    for (id, (_, pc)) in &out.nodes {
        if !pc.is_true() {
            graph.set_node_attr(id, PC_KEY, store.render(*pc))?;
        }
    }
    for (edge, pc) in &out.edges {
        graph.add_edge(edge.clone())?;
        if !pc.is_true() {
            graph.set_edge_attr(edge, PC_KEY, store.render(*pc))?;
        }
    }
    Ok(Extraction {
        graph,
        occurrences: out.occurrences,
    })
}

impl<'a> Walker<'a> {
    // ---- emission ----

    fn node(&mut self, id: &str, kind: NodeKind) {
        if self.pc.is_false() {
            return;
        }
        let (_, pc) = self.out.nodes.entry(id.to_string()).or_insert((kind, Pc::FALSE));
        *pc = self.store.or(*pc, self.pc);
    }

    fn edge(&mut self, etype: &str, src: &str, dst: &str, pos: Pos) {
        if self.pc.is_false() {
            return;
        }
        let edge = Edge::new(etype, src, dst);
        let slot = self.out.edges.entry(edge.clone()).or_insert(Pc::FALSE);
        *slot = self.store.or(*slot, self.pc);
        self.out.occurrences.push(FactOccurrence {
            edge,
            file: self.file.to_string(),
            pos,
            pc: self.pc,
        });
    }

    fn fresh_id(&mut self, base: String) -> String {
        let mut id = base.clone();
        let mut n = 2;
        while !self.used_ids.insert(id.clone()) {
            id = format!("{base}~{n}");
            n += 1;
        }
        id
    }

    // ---- resolution ----

    fn resolve(&self, name: &str) -> Resolved<'a> {
        for s in self.scopes.iter().rev() {
            if let Some(id) = s.get(name) {
                return Resolved::Node(id.clone());
            }
        }
        if let Some(c) = &self.class {
            if let Some(id) = c.vars.get(name) {
                return Resolved::Node(id.clone());
            }
        }
        if let Some(f) = self.features.get(name) {
            return Resolved::Feature(f);
        }
        if let Some(id) = self.index.globals.get(name) {
            return Resolved::Node(id.clone());
        }
        if self.index.enum_literals.contains(name) {
            return Resolved::EnumLiteral;
        }
        Resolved::Unknown
    }

    fn resolve_func(&self, name: &str) -> Option<FuncRef> {
        if let Some(c) = &self.class {
            if let Some(f) = c.funcs.get(name) {
                return Some(f.clone());
            }
        }
        self.index.functions.get(name).cloned()
    }

    /// Non-feature variable nodes occurring in `e`, in first-occurrence order.
    fn var_uses(&self, e: &Expr) -> Vec<String> {
        let mut out = Vec::new();
        e.visit_idents(&mut |name, _| {
            if let Resolved::Node(id) = self.resolve(name) {
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        });
        out
    }

    // ---- feature conditions ----

    fn literal_text(&self, e: &Expr) -> Option<String> {
        match &e.kind {
            ExprKind::Int(i) => Some(i.to_string()),
            ExprKind::Ident(n) if matches!(self.resolve(n), Resolved::EnumLiteral) => Some(n.clone()),
            _ => None,
        }
    }

    fn bool_literal(e: &Expr) -> Option<bool> {
        match e.kind {
            ExprKind::Bool(b) => Some(b),
            ExprKind::Int(i) => Some(i != 0),
            _ => None,
        }
    }

    fn feature_var(&self, e: &Expr) -> Option<&'a FeatureVar> {
        match &e.kind {
            ExprKind::Ident(n) => match self.resolve(n) {
                Resolved::Feature(f) => Some(f),
                _ => None,
            },
            _ => None,
        }
    }

    /// The comparison `a op b` over features and literals, normalised so the
    /// feature variable is on the left.
    fn feature_comparison<'e>(&self, op: BinOp, a: &'e Expr, b: &'e Expr) -> Option<(CompareOp, &'e Expr, &'e Expr)> {
        let cmp = CompareOp::from_symbol(op.comparison_symbol()?)?;
        if self.feature_var(a).is_some() {
            Some((cmp, a, b))
        } else if self.feature_var(b).is_some() {
            Some((cmp.flipped(), b, a))
        } else {
            None
        }
    }

    fn is_feature_only(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Bool(_) | ExprKind::Int(_) => true,
            ExprKind::Ident(_) => matches!(self.feature_var(e), Some(FeatureVar::Bool(_))),
            ExprKind::Unary(UnOp::Not, a) => self.is_feature_only(a),
            ExprKind::Binary(BinOp::And | BinOp::Or, a, b) => self.is_feature_only(a) && self.is_feature_only(b),
            ExprKind::Binary(op, a, b) => {
                let Some((cmp, var, other)) = self.feature_comparison(*op, a, b) else {
                    return false;
                };
                match self.feature_var(var) {
                    Some(FeatureVar::Bool(_)) => {
                        matches!(cmp, CompareOp::Eq | CompareOp::Ne) && Self::bool_literal(other).is_some()
                    }
                    Some(FeatureVar::Enum { .. }) => {
                        self.literal_text(other).is_some()
                            || matches!(self.feature_var(other), Some(FeatureVar::Enum { .. }))
                    }
                    None => false,
                }
            }
            _ => false,
        }
    }

    /// Only valid when `is_feature_only(e)` holds.
    fn feature_expr_of(&mut self, e: &Expr) -> FeatureExpr {
        match &e.kind {
            ExprKind::Bool(b) => bool_expr(*b),
            ExprKind::Int(i) => bool_expr(*i != 0),
            ExprKind::Ident(_) => match self.feature_var(e) {
                Some(FeatureVar::Bool(id)) => FeatureExpr::Var(*id),
                _ => unreachable!("checked by is_feature_only"),
            },
            ExprKind::Unary(UnOp::Not, a) => FeatureExpr::not(self.feature_expr_of(a)),
            ExprKind::Binary(BinOp::And, a, b) => FeatureExpr::and(self.feature_expr_of(a), self.feature_expr_of(b)),
            ExprKind::Binary(BinOp::Or, a, b) => FeatureExpr::or(self.feature_expr_of(a), self.feature_expr_of(b)),
            ExprKind::Binary(op, a, b) => {
                let (cmp, var, other) = self.feature_comparison(*op, a, b).expect("checked by is_feature_only");
                let ExprKind::Ident(var_name) = &var.kind else {
                    unreachable!()
                };
                match self.feature_var(var) {
                    Some(FeatureVar::Bool(id)) => {
                        let lit = Self::bool_literal(other).expect("checked");
                        let v = FeatureExpr::Var(*id);
                        if lit == (cmp == CompareOp::Eq) {
                            v
                        } else {
                            FeatureExpr::not(v)
                        }
                    }
                    _ => {
                        let rhs = match &other.kind {
                            ExprKind::Ident(n) => n.clone(),
                            _ => self.literal_text(other).expect("checked"),
                        };
                        FeatureExpr::Var(abstract_comparison(self.store.features_mut(), var_name, cmp, &rhs))
                    }
                }
            }
            _ => unreachable!("checked by is_feature_only"),
        }
    }

    fn feature_cond(&mut self, e: &Expr) -> Option<Pc> {
        if !self.is_feature_only(e) {
            return None;
        }
        let fe = self.feature_expr_of(e);
        Some(self.store.to_pc(&fe))
    }

    // ---- items ----

    fn unit(&mut self, ui: usize, unit: &TranslationUnit, component: Option<&str>) {
        let file = self.file;
        self.node(file, NodeKind::File);
        if let Some(c) = component {
            self.node(c, NodeKind::Component);
            self.edge(edge_type::CONTAIN, c, file, Pos::default());
        }
        for item in &unit.items {
            match item {
                Item::Enum(_) => {}
                Item::Var(v) => {
                    if self.features.get(&v.name).is_some() {
                        continue;
                    }
                    let id = format!("{file}#{}", v.name);
                    if self.index.globals.get(&v.name) != Some(&id) {
                        continue;
                    }
                    if self.used_ids.insert(id.clone()) {
                        self.node(&id, NodeKind::Variable);
                        self.edge(edge_type::CONTAIN, file, &id, v.pos);
                    }
                    if let Some(init) = &v.init {
                        self.initializer(&id, init, v.pos);
                    }
                }
                Item::Func(f) => {
                    let owned = self.index.function_owner.get(&f.name) == Some(&ui);
                    match &f.body {
                        Some(_) => {
                            let id = format!("{file}#{}", f.name);
                            let fref = FuncRef {
                                params: Some(f.params.iter().map(|p| format!("{id}#{}", p.name)).collect()),
                                node: id,
                            };
                            self.function(f, &fref, file, component);
                        }
                        None if owned && self.index.functions[&f.name].params.is_none() => {
                            let id = self.index.functions[&f.name].node.clone();
                            if self.used_ids.insert(id.clone()) {
                                self.node(&id, NodeKind::Function);
                                self.edge(edge_type::CONTAIN, file, &id, f.pos);
                            }
                        }
                        None => {}
                    }
                }
                Item::Class(c) => self.class(c, file, component),
            }
        }
    }

    fn class(&mut self, c: &ClassDecl, file: &str, component: Option<&str>) {
        let cid = format!("{file}#{}", c.name);
        self.used_ids.insert(cid.clone());
        self.node(&cid, NodeKind::Class);
        self.edge(edge_type::CONTAIN, file, &cid, c.pos);
        let mut scope = ClassScope {
            vars: HashMap::new(),
            funcs: HashMap::new(),
        };
        for m in &c.members {
            match m {
                Item::Var(v) => {
                    scope.vars.insert(v.name.clone(), format!("{cid}#{}", v.name));
                }
                Item::Func(f) => {
                    let node = format!("{cid}#{}", f.name);
                    let params = f.params.iter().map(|p| format!("{node}#{}", p.name)).collect();
                    scope.funcs.insert(
                        f.name.clone(),
                        FuncRef {
                            node,
                            params: Some(params),
                        },
                    );
                }
                _ => {}
            }
        }
        let outer = self.class.replace(scope);
        for m in &c.members {
            match m {
                Item::Var(v) => {
                    let id = format!("{cid}#{}", v.name);
                    self.used_ids.insert(id.clone());
                    self.node(&id, NodeKind::Variable);
                    self.edge(edge_type::CONTAIN, &cid, &id, v.pos);
                    if let Some(init) = &v.init {
                        self.initializer(&id, init, v.pos);
                    }
                }
                Item::Func(f) => {
                    let fref = self.class.as_ref().unwrap().funcs[&f.name].clone();
                    if f.body.is_some() {
                        self.function(f, &fref, &cid, component);
                    } else {
                        self.node(&fref.node, NodeKind::Function);
                        self.edge(edge_type::CONTAIN, &cid, &fref.node, f.pos);
                    }
                }
                _ => {}
            }
        }
        self.class = outer;
    }

    fn function(&mut self, f: &FuncDef, fref: &FuncRef, container: &str, component: Option<&str>) {
        let id = fref.node.clone();
        self.used_ids.insert(id.clone());
        self.node(&id, NodeKind::Function);
        self.edge(edge_type::CONTAIN, container, &id, f.pos);
        if let Some(c) = component {
            self.edge(edge_type::C_FUNCTION, &id, c, f.pos);
        }
        let mut params = HashMap::new();
        for (p, pid) in f.params.iter().zip(fref.params.iter().flatten()) {
            self.used_ids.insert(pid.clone());
            self.node(pid, NodeKind::Variable);
            self.edge(edge_type::CONTAIN, &id, pid, p.pos);
            params.insert(p.name.clone(), pid.clone());
        }
        self.func = Some(id);
        self.scopes = vec![params];
        self.guards.clear();
        if let Some(body) = &f.body {
            self.block(body);
        }
        self.scopes.clear();
        self.func = None;
    }

    /// A declaration initializer acts as an assignment outside any function.
    fn initializer(&mut self, target: &str, init: &Expr, pos: Pos) {
        for v0 in self.var_uses(init) {
            self.edge(edge_type::VAR_WRITE, &v0, target, pos);
        }
        self.expr(init);
    }

    // ---- statements ----

    fn block(&mut self, b: &Block) {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn scoped(&mut self, s: &Stmt) {
        self.scopes.push(HashMap::new());
        self.stmt(s);
        self.scopes.pop();
    }

    /// Runs `f` with `pc` conjoined onto the active condition.
    fn under_pc(&mut self, pc: Pc, f: impl FnOnce(&mut Self)) {
        let saved = self.pc;
        self.pc = self.store.and(saved, pc);
        f(self);
        self.pc = saved;
    }

    fn under_guard(&mut self, vars: Vec<String>, f: impl FnOnce(&mut Self)) {
        self.guards.push(vars);
        f(self);
        self.guards.pop();
    }

    /// Walks `body` as controlled by `cond`: feature-only conditions narrow
    /// the presence condition, anything else guards the calls within.
    fn controlled(&mut self, cond: &Expr, negate: bool, body: impl FnOnce(&mut Self)) {
        match self.feature_cond(cond) {
            Some(pc) => {
                let pc = if negate { self.store.not(pc) } else { pc };
                self.under_pc(pc, body)
            }
            None => {
                let vars = self.var_uses(cond);
                self.under_guard(vars, body)
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(v) => {
                let base = format!("{}#{}", self.func.as_deref().unwrap_or(self.file), v.name);
                let id = self.fresh_id(base);
                if let Some(f) = self.func.clone() {
                    self.node(&id, NodeKind::Variable);
                    self.edge(edge_type::CONTAIN, &f, &id, v.pos);
                }
                if let Some(init) = &v.init {
                    self.assignment(&id, None, init, v.pos);
                }
                self.scopes.last_mut().unwrap().insert(v.name.clone(), id);
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::If { cond, then, els } => {
                self.expr(cond);
                self.controlled(cond, false, |w| w.scoped(then));
                if let Some(els) = els {
                    self.controlled(cond, true, |w| w.scoped(els));
                }
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                self.expr(cond);
                self.controlled(cond, false, |w| w.scoped(body));
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                if let Some(init) = init {
                    match &init.kind {
                        StmtKind::Block(b) => {
                            for s in &b.stmts {
                                self.stmt(s);
                            }
                        }
                        _ => self.stmt(init),
                    }
                }
                let run = |w: &mut Self| {
                    if let Some(step) = step {
                        w.expr(step);
                    }
                    w.scoped(body);
                };
                match cond {
                    Some(c) => {
                        self.expr(c);
                        self.controlled(c, false, run);
                    }
                    None => run(self),
                }
                self.scopes.pop();
            }
            StmtKind::Switch { scrutinee, cases } => self.switch(scrutinee, cases),
            StmtKind::Return(Some(e)) => self.expr(e),
            StmtKind::Block(b) => self.block(b),
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
        }
    }

    fn switch(&mut self, scrutinee: &Expr, cases: &[Case]) {
        self.expr(scrutinee);
        self.scopes.push(HashMap::new());
        let enum_var = match (&scrutinee.kind, self.feature_var(scrutinee)) {
            (ExprKind::Ident(name), Some(FeatureVar::Enum { .. })) => Some(name.clone()),
            _ => None,
        };
        match enum_var {
            Some(var) => {
                // each label becomes `var_EQ_label`; default is the complement
                let mut labels = Vec::new();
                let mut all_abstracted = true;
                for c in cases {
                    let pc = c.label.as_ref().and_then(|l| self.case_pc(&var, l));
                    if c.label.is_some() && pc.is_none() {
                        all_abstracted = false;
                    }
                    labels.push(pc);
                }
                let default_pc = if all_abstracted {
                    let any = self.store.or_all(labels.iter().flatten().copied());
                    self.store.not(any)
                } else {
                    Pc::TRUE
                };
                let mut carry = Pc::FALSE;
                for (c, label) in cases.iter().zip(labels) {
                    let own = match (&c.label, label) {
                        (None, _) => default_pc,
                        (Some(_), Some(pc)) => pc,
                        (Some(_), None) => Pc::TRUE,
                    };
                    let pc = self.store.or(own, carry);
                    self.under_pc(pc, |w| {
                        for s in &c.body {
                            w.stmt(s);
                        }
                    });
                    carry = if ends_arm(&c.body) { Pc::FALSE } else { pc };
                }
            }
            None => {
                let vars = self.var_uses(scrutinee);
                self.under_guard(vars, |w| {
                    for c in cases {
                        if let Some(l) = &c.label {
                            w.expr(l);
                        }
                        for s in &c.body {
                            w.stmt(s);
                        }
                    }
                });
            }
        }
        self.scopes.pop();
    }

    fn case_pc(&mut self, var: &str, label: &Expr) -> Option<Pc> {
        let rhs = self.literal_text(label)?;
        let id = abstract_comparison(self.store.features_mut(), var, CompareOp::Eq, &rhs);
        Some(self.store.var(id))
    }

    // ---- expressions ----

    fn assignment(&mut self, target: &str, op: AssignOp, value: &Expr, pos: Pos) {
        if let Some(f) = self.func.clone() {
            self.edge(edge_type::WRITE, &f, target, pos);
        }
        let mut uses = self.var_uses(value);
        if op.is_some() && !uses.iter().any(|u| u == target) {
            uses.push(target.to_string());
        }
        for v0 in uses {
            self.edge(edge_type::VAR_WRITE, &v0, target, pos);
        }
        self.expr(value);
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Ident(_) | ExprKind::Int(_) | ExprKind::Bool(_) => {}
            ExprKind::Unary(_, a) => self.expr(a),
            ExprKind::Binary(_, a, b) => {
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Conditional(c, a, b) => {
                self.expr(c);
                self.expr(a);
                self.expr(b);
            }
            ExprKind::Assign {
                op,
                target,
                target_pos,
                value,
            } => {
                if let Resolved::Node(t) = self.resolve(target) {
                    self.assignment(&t, *op, value, *target_pos);
                } else {
                    self.expr(value);
                }
            }
            ExprKind::IncDec { target, .. } => {
                if let Resolved::Node(t) = self.resolve(target) {
                    if let Some(f) = self.func.clone() {
                        self.edge(edge_type::WRITE, &f, &t, e.pos);
                    }
                    self.edge(edge_type::VAR_WRITE, &t, &t, e.pos);
                }
            }
            ExprKind::Call { callee, args } => {
                let Some(g) = self.resolve_func(callee) else {
                    for a in args {
                        self.expr(a);
                    }
                    return;
                };
                if let Some(f) = self.func.clone() {
                    self.edge(edge_type::CALL, &f, &g.node, e.pos);
                }
                let guard_vars: Vec<String> = self.guards.iter().flatten().cloned().collect();
                for v in guard_vars {
                    self.edge(edge_type::VAR_INF_FUNC, &v, &g.node, e.pos);
                }
                if let Some(params) = &g.params {
                    for (arg, param) in args.iter().zip(params) {
                        for v0 in self.var_uses(arg) {
                            self.edge(edge_type::VAR_WRITE, &v0, param, arg.pos);
                        }
                    }
                }
                for a in args {
                    self.expr(a);
                }
            }
        }
    }
}

fn bool_expr(b: bool) -> FeatureExpr {
    if b {
        FeatureExpr::True
    } else {
        FeatureExpr::False
    }
}

/// Whether control cannot fall out of the end of a case arm.
fn ends_arm(body: &[Stmt]) -> bool {
    matches!(
        body.last().map(|s| &s.kind),
        Some(StmtKind::Break | StmtKind::Return(_) | StmtKind::Continue)
    )
}

/// Feature names referenced by any PC attribute of `graph`.
pub fn referenced_features(graph: &FactGraph, registry: &mut FeatureRegistry) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let pcs = graph
        .node_attrs()
        .filter_map(|(_, a)| a.get(PC_KEY))
        .chain(graph.edge_attrs().filter_map(|(_, a)| a.get(PC_KEY)));
    for pc in pcs {
        if let Ok(e) = crate::featexpr::parse_feature_expr(pc, registry) {
            let mut ids = Vec::new();
            e.features(&mut ids);
            out.extend(ids.into_iter().map(|id| registry.name(id).to_string()));
        }
    }
    out
}
