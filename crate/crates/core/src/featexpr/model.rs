use std::fmt;

use super::expr::{parse_feature_expr, FeatureExpr, FeatureId, FeatureOrigin, FeatureRegistry};
use super::store::{Pc, PcStore};
use super::FeatureExprError;

/// A total present/absent assignment over the registered features.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    present: Vec<bool>,
}

impl Configuration {
    /// Every feature absent.
    pub fn none(registry: &FeatureRegistry) -> Self {
        Configuration {
            present: vec![false; registry.len()],
        }
    }

    pub fn all_present(registry: &FeatureRegistry) -> Self {
        Configuration {
            present: vec![true; registry.len()],
        }
    }

    pub fn from_present(registry: &FeatureRegistry, present: impl IntoIterator<Item = FeatureId>) -> Self {
        let mut c = Self::none(registry);
        for f in present {
            c.present[f.index()] = true;
        }
        c
    }

    /// Bit `i` of `mask` gives feature `i`. Only the low `n` bits are read.
    pub fn from_bits(n: usize, mask: u64) -> Self {
        Configuration {
            present: (0..n).map(|i| i < 64 && mask >> i & 1 == 1).collect(),
        }
    }

    /// All `2^n` configurations over `n` features, in counting order.
    pub fn enumerate(n: usize) -> impl Iterator<Item = Configuration> {
        assert!(n < 32, "refusing to enumerate 2^{n} configurations");
        (0..1u64 << n).map(move |m| Configuration::from_bits(n, m))
    }

    /// Features registered after this configuration was built count as absent.
    pub fn is_present(&self, f: FeatureId) -> bool {
        self.present.get(f.index()).copied().unwrap_or(false)
    }

    pub fn set(&mut self, f: FeatureId, value: bool) {
        if f.index() >= self.present.len() {
            self.present.resize(f.index() + 1, false);
        }
        self.present[f.index()] = value;
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn present(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| FeatureId(i as u32))
    }

    pub fn display<'a>(&'a self, registry: &'a FeatureRegistry) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Configuration, &'a FeatureRegistry);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let names: Vec<_> = self.0.present().map(|id| self.1.name(id)).collect();
                write!(f, "{{{}}}", names.join(", "))
            }
        }
        D(self, registry)
    }
}

/// Standard propositional evaluation of `expr` under `rho`.
pub fn evaluate(expr: &FeatureExpr, rho: &Configuration) -> bool {
    expr.eval_with(&|f| rho.is_present(f))
}

/// A conjunction of constraints restricting the valid configurations.
#[derive(Clone, Debug)]
pub struct FeatureModel {
    pub constraints: Vec<FeatureExpr>,
    pub compiled: Pc,
    /// Id of the store `compiled` lives in; `None` for the trivial model.
    pub store_id: Option<u64>,
}

impl FeatureModel {
    /// The unconstrained model.
    pub fn trivial() -> Self {
        FeatureModel {
            constraints: Vec::new(),
            compiled: Pc::TRUE,
            store_id: None,
        }
    }

    pub fn from_constraints(constraints: Vec<FeatureExpr>, store: &mut PcStore) -> Result<Self, FeatureExprError> {
        let mut compiled = Pc::TRUE;
        for c in &constraints {
            let pc = store.to_pc(c);
            compiled = store.and(compiled, pc);
        }
        if compiled.is_false() {
            return Err(FeatureExprError::UnsatisfiableModel);
        }
        Ok(FeatureModel {
            constraints,
            compiled,
            store_id: Some(store.id()),
        })
    }

    /// Parses a feature-model file: one constraint per line, `#` comments,
    /// blank lines ignored. Unknown features are registered.
    pub fn parse(text: &str, store: &mut PcStore) -> Result<Self, FeatureExprError> {
        let mut constraints = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let body = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            };
            if body.trim().is_empty() {
                continue;
            }
            let expr = parse_feature_expr(body, store.features_mut()).map_err(|e| FeatureExprError::InModel {
                line: lineno + 1,
                source: Box::new(e),
            })?;
            constraints.push(expr);
        }
        Self::from_constraints(constraints, store)
    }

    pub fn is_trivial(&self) -> bool {
        self.compiled.is_true()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    pub fn tag(self) -> &'static str {
        match self {
            CompareOp::Lt => "LT",
            CompareOp::Le => "LE",
            CompareOp::Gt => "GT",
            CompareOp::Ge => "GE",
            CompareOp::Eq => "EQ",
            CompareOp::Ne => "NE",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CompareOp::Lt,
            "<=" => CompareOp::Le,
            ">" => CompareOp::Gt,
            ">=" => CompareOp::Ge,
            "==" => CompareOp::Eq,
            "!=" => CompareOp::Ne,
            _ => return None,
        })
    }

    /// The operator with its operands swapped (`a < b` ⇔ `b > a`).
    pub fn flipped(self) -> Self {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Ge => CompareOp::Le,
            other => other,
        }
    }
}

/// Name of the propositional symbol standing for `lhs op rhs`.
pub fn comparison_feature_name(lhs: &str, op: CompareOp, rhs: &str) -> String {
    format!("{lhs}_{}_{rhs}", op.tag())
}

/// Registers (or finds) the boolean abstraction of an enum comparison,
/// e.g. `x < Feat2` becomes `x_LT_Feat2`.
pub fn abstract_comparison(registry: &mut FeatureRegistry, lhs: &str, op: CompareOp, rhs: &str) -> FeatureId {
    registry.register(
        &comparison_feature_name(lhs, op, rhs),
        FeatureOrigin::AbstractedComparison,
    )
}

/// Pairwise mutual exclusion over `members`, plus their disjunction when
/// one of them is mandatory.
pub fn enum_group_constraints(members: &[FeatureId], mandatory: bool) -> Vec<FeatureExpr> {
    debug_assert!(members.len() >= 2, "an enum group needs at least two members");
    let mut out = Vec::new();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            out.push(FeatureExpr::not(FeatureExpr::and(
                FeatureExpr::var(a),
                FeatureExpr::var(b),
            )));
        }
    }
    if mandatory {
        out.push(FeatureExpr::any(members.iter().map(|&m| FeatureExpr::var(m))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat_set(store: &mut PcStore) -> Vec<FeatureId> {
        (0..4)
            .map(|i| store.register(&format!("Feat{i}"), FeatureOrigin::EnumLiteral))
            .collect()
    }

    #[test]
    fn evaluate_projection_examples() {
        let mut r = FeatureRegistry::new();
        let both = parse_feature_expr("FA & FB", &mut r).unwrap();
        let excl = parse_feature_expr("FA & !FB", &mut r).unwrap();
        let only_a = Configuration::from_present(&r, [r.lookup("FA").unwrap()]);
        assert!(!evaluate(&both, &only_a));
        assert!(evaluate(&excl, &only_a));
        assert!(evaluate(&FeatureExpr::True, &Configuration::none(&r)));
    }

    #[test]
    fn comparison_names() {
        let mut r = FeatureRegistry::new();
        let a = abstract_comparison(&mut r, "x", CompareOp::Lt, "Feat2");
        assert_eq!(r.name(a), "x_LT_Feat2");
        assert_eq!(abstract_comparison(&mut r, "x", CompareOp::Lt, "Feat2"), a);
        let b = abstract_comparison(&mut r, "x", CompareOp::Eq, "Feat3");
        assert_eq!(r.name(b), "x_EQ_Feat3");
        let c = abstract_comparison(&mut r, "mode", CompareOp::from_symbol(">=").unwrap(), "Feat1");
        assert_eq!(r.name(c), "mode_GE_Feat1");
        assert_eq!(r.get(c).origin, FeatureOrigin::AbstractedComparison);
    }

    #[test]
    fn enum_group_exclusions() {
        let mut s = PcStore::new();
        let m = feat_set(&mut s);
        let optional = enum_group_constraints(&m, false);
        assert_eq!(optional.len(), 6);
        let mandatory = enum_group_constraints(&m, true);
        assert_eq!(mandatory.len(), 7);
        let disj = s.parse("Feat0 | Feat1 | Feat2 | Feat3").unwrap();
        assert_eq!(s.to_pc(&mandatory[6]), disj);

        // exactly-one for two members
        let ab = enum_group_constraints(&m[..2], true);
        assert_eq!(ab.len(), 2);
        let fm = FeatureModel::from_constraints(ab, &mut s).unwrap();
        let xor = s.parse("Feat0 & !Feat1 | !Feat0 & Feat1").unwrap();
        assert_eq!(fm.compiled, xor);
    }

    #[test]
    fn model_file_parsing() {
        let mut s = PcStore::new();
        let fm = FeatureModel::parse("# exclusions\n!(FA & FB)\n\n FC | FA  # trailing\n", &mut s).unwrap();
        assert_eq!(fm.constraints.len(), 2);
        let expect = s.parse("!(FA & FB) & (FC | FA)").unwrap();
        assert_eq!(fm.compiled, expect);
    }

    #[test]
    fn model_errors() {
        let mut s = PcStore::new();
        assert!(matches!(
            FeatureModel::parse("FA\n!FA\n", &mut s),
            Err(FeatureExprError::UnsatisfiableModel)
        ));
        match FeatureModel::parse("FA\nFA &\n", &mut s) {
            Err(FeatureExprError::InModel { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn configuration_enumeration() {
        let all: Vec<_> = Configuration::enumerate(2).collect();
        assert_eq!(all.len(), 4);
        assert!(all[3].is_present(FeatureId(0)) && all[3].is_present(FeatureId(1)));
        assert!(all[1].is_present(FeatureId(0)) && !all[1].is_present(FeatureId(1)));
    }
}
