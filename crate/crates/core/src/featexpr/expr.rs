//! Feature registry, feature-expression AST and its concrete syntax.
//!
//! Grammar (whitespace insignificant, `&&`/`||` accepted as synonyms):
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor ('&' factor)*
//! factor := '!' factor | '(' expr ')' | ident | 'true' | 'false'
//! ```

use std::collections::HashMap;
use std::fmt;

use super::FeatureExprError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(pub u32);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Where a feature came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureOrigin {
    DeclaredBoolean,
    EnumLiteral,
    AbstractedComparison,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub origin: FeatureOrigin,
}

/// The set of features known to one analysis run, in registration order.
///
/// Registration order doubles as the decision-diagram variable order.
#[derive(Clone, Debug, Default)]
pub struct FeatureRegistry {
    features: Vec<Feature>,
    by_name: HashMap<String, FeatureId>,
    closed: bool,
}

impl FeatureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `name`, returning the existing id if it is already known.
    /// The origin of an existing feature is left untouched.
    pub fn register(&mut self, name: &str, origin: FeatureOrigin) -> FeatureId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = FeatureId(self.features.len() as u32);
        self.features.push(Feature {
            name: name.to_string(),
            origin,
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<FeatureId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: FeatureId) -> &Feature {
        &self.features[id.index()]
    }

    pub fn name(&self, id: FeatureId) -> &str {
        &self.features[id.index()].name
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, &Feature)> {
        self.features.iter().enumerate().map(|(i, f)| (FeatureId(i as u32), f))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// A closed registry rejects unknown identifiers instead of registering them.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn set_closed(&mut self, closed: bool) {
        self.closed = closed;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FeatureExpr {
    True,
    False,
    Var(FeatureId),
    Not(Box<FeatureExpr>),
    And(Box<FeatureExpr>, Box<FeatureExpr>),
    Or(Box<FeatureExpr>, Box<FeatureExpr>),
}

impl FeatureExpr {
    pub fn var(id: FeatureId) -> Self {
        FeatureExpr::Var(id)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: FeatureExpr) -> Self {
        FeatureExpr::Not(Box::new(e))
    }

    pub fn and(a: FeatureExpr, b: FeatureExpr) -> Self {
        FeatureExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: FeatureExpr, b: FeatureExpr) -> Self {
        FeatureExpr::Or(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `True` for an empty list.
    pub fn all(items: impl IntoIterator<Item = FeatureExpr>) -> Self {
        items.into_iter().reduce(FeatureExpr::and).unwrap_or(FeatureExpr::True)
    }

    /// Left-nested disjunction; `False` for an empty list.
    pub fn any(items: impl IntoIterator<Item = FeatureExpr>) -> Self {
        items.into_iter().reduce(FeatureExpr::or).unwrap_or(FeatureExpr::False)
    }

    /// Standard propositional evaluation; `value` gives each feature's truth.
    pub fn eval_with(&self, value: &impl Fn(FeatureId) -> bool) -> bool {
        match self {
            FeatureExpr::True => true,
            FeatureExpr::False => false,
            FeatureExpr::Var(id) => value(*id),
            FeatureExpr::Not(e) => !e.eval_with(value),
            FeatureExpr::And(a, b) => a.eval_with(value) && b.eval_with(value),
            FeatureExpr::Or(a, b) => a.eval_with(value) || b.eval_with(value),
        }
    }

    pub fn features(&self, out: &mut Vec<FeatureId>) {
        match self {
            FeatureExpr::True | FeatureExpr::False => {}
            FeatureExpr::Var(id) => out.push(*id),
            FeatureExpr::Not(e) => e.features(out),
            FeatureExpr::And(a, b) | FeatureExpr::Or(a, b) => {
                a.features(out);
                b.features(out);
            }
        }
    }

    /// Renders in the concrete syntax, fully parenthesising binary nodes
    /// below the top level.
    pub fn display<'a>(&'a self, registry: &'a FeatureRegistry) -> DisplayExpr<'a> {
        DisplayExpr { expr: self, registry }
    }
}

pub struct DisplayExpr<'a> {
    expr: &'a FeatureExpr,
    registry: &'a FeatureRegistry,
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(e: &FeatureExpr, r: &FeatureRegistry, top: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                FeatureExpr::True => f.write_str("true"),
                FeatureExpr::False => f.write_str("false"),
                FeatureExpr::Var(id) => f.write_str(r.name(*id)),
                FeatureExpr::Not(inner) => {
                    f.write_str("!")?;
                    go(inner, r, false, f)
                }
                FeatureExpr::And(a, b) | FeatureExpr::Or(a, b) => {
                    let op = if matches!(e, FeatureExpr::And(..)) {
                        " & "
                    } else {
                        " | "
                    };
                    if !top {
                        f.write_str("(")?;
                    }
                    go(a, r, false, f)?;
                    f.write_str(op)?;
                    go(b, r, false, f)?;
                    if !top {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self.expr, self.registry, true, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, FeatureExprError> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn advance(&mut self) -> Result<(), FeatureExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        let Some(c) = self.src[self.pos..].chars().next() else {
            self.tok = Tok::End;
            return Ok(());
        };
        let double = |p: &mut Self, t: Tok, ch: u8| {
            p.pos += 1;
            if p.pos < bytes.len() && bytes[p.pos] == ch {
                p.pos += 1;
            }
            t
        };
        self.tok = match c {
            '!' => {
                self.pos += 1;
                Tok::Not
            }
            '&' => double(self, Tok::And, b'&'),
            '|' => double(self, Tok::Or, b'|'),
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            c if is_ident_start(c) => {
                let start = self.pos;
                while self.pos < bytes.len() && is_ident_char(bytes[self.pos] as char) {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            other => {
                return Err(FeatureExprError::Syntax {
                    offset: self.pos,
                    message: format!("unexpected character {other:?}"),
                })
            }
        };
        Ok(())
    }

    fn error<T>(&self, message: &str) -> Result<T, FeatureExprError> {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        };
        Err(FeatureExprError::Syntax {
            offset: self.tok_start,
            message: format!("{message}, found {found}"),
        })
    }

    fn expr(&mut self, reg: &mut FeatureRegistry) -> Result<FeatureExpr, FeatureExprError> {
        let mut lhs = self.term(reg)?;
        while self.tok == Tok::Or {
            self.advance()?;
            let rhs = self.term(reg)?;
            lhs = FeatureExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self, reg: &mut FeatureRegistry) -> Result<FeatureExpr, FeatureExprError> {
        let mut lhs = self.factor(reg)?;
        while self.tok == Tok::And {
            self.advance()?;
            let rhs = self.factor(reg)?;
            lhs = FeatureExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self, reg: &mut FeatureRegistry) -> Result<FeatureExpr, FeatureExprError> {
        match self.tok.clone() {
            Tok::Not => {
                self.advance()?;
                Ok(FeatureExpr::not(self.factor(reg)?))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.expr(reg)?;
                if self.tok != Tok::RParen {
                    return self.error("expected `)`");
                }
                self.advance()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let offset = self.tok_start;
                let e = match name.as_str() {
                    "true" => FeatureExpr::True,
                    "false" => FeatureExpr::False,
                    _ => match reg.lookup(&name) {
                        Some(id) => FeatureExpr::Var(id),
                        None if reg.is_closed() => return Err(FeatureExprError::UnknownFeature { name, offset }),
                        None => FeatureExpr::Var(reg.register(&name, FeatureOrigin::DeclaredBoolean)),
                    },
                };
                self.advance()?;
                Ok(e)
            }
            _ => self.error("expected a feature, `true`, `false`, `!` or `(`"),
        }
    }
}

/// Parses `text` in the feature-expression grammar.
///
/// Unknown identifiers are registered as declared-boolean features unless
/// the registry is closed. Nothing is registered if parsing fails.
pub fn parse_feature_expr(text: &str, registry: &mut FeatureRegistry) -> Result<FeatureExpr, FeatureExprError> {
    let mut scratch = registry.clone();
    let mut p = Parser::new(text)?;
    let e = p.expr(&mut scratch)?;
    if p.tok != Tok::End {
        return p.error("expected `&`, `|` or end of input");
    }
    *registry = scratch;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> FeatureRegistry {
        FeatureRegistry::new()
    }

    #[test]
    fn conjunction_with_negation() {
        let mut r = reg();
        let e = parse_feature_expr("FA & !FB", &mut r).unwrap();
        let fa = r.lookup("FA").unwrap();
        let fb = r.lookup("FB").unwrap();
        assert_eq!(
            e,
            FeatureExpr::and(FeatureExpr::Var(fa), FeatureExpr::not(FeatureExpr::Var(fb)))
        );
    }

    #[test]
    fn constants() {
        let mut r = reg();
        assert_eq!(parse_feature_expr("true", &mut r).unwrap(), FeatureExpr::True);
        assert_eq!(parse_feature_expr(" false ", &mut r).unwrap(), FeatureExpr::False);
        assert!(r.is_empty());
    }

    #[test]
    fn nested_parentheses() {
        let mut r = reg();
        let e = parse_feature_expr("FA & (FB | !FC)", &mut r).unwrap();
        let v = |n: &str| FeatureExpr::Var(r.lookup(n).unwrap());
        assert_eq!(
            e,
            FeatureExpr::and(v("FA"), FeatureExpr::or(v("FB"), FeatureExpr::not(v("FC"))))
        );
    }

    #[test]
    fn precedence_and_binds_tighter() {
        let mut r = reg();
        let e = parse_feature_expr("A | B & C", &mut r).unwrap();
        let v = |n: &str| FeatureExpr::Var(r.lookup(n).unwrap());
        assert_eq!(e, FeatureExpr::or(v("A"), FeatureExpr::and(v("B"), v("C"))));
    }

    #[test]
    fn double_operators_are_synonyms() {
        let mut r = reg();
        let a = parse_feature_expr("FA && !FB || FC", &mut r).unwrap();
        let b = parse_feature_expr("FA & !FB | FC", &mut r).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn registration_follows_parse_order() {
        let mut r = reg();
        parse_feature_expr("FC | FA & FB", &mut r).unwrap();
        assert_eq!(r.names().collect::<Vec<_>>(), ["FC", "FA", "FB"]);
    }

    #[test]
    fn syntax_error_reports_offset() {
        let mut r = reg();
        match parse_feature_expr("FA &", &mut r) {
            Err(FeatureExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse_feature_expr("FA $ FB", &mut r) {
            Err(FeatureExprError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_feature_expr("(FA | FB", &mut r) {
            Err(FeatureExprError::Syntax { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
        // a failed parse registers nothing
        assert!(r.is_empty());
    }

    #[test]
    fn closed_registry_rejects_unknown() {
        let mut r = reg();
        r.register("FA", FeatureOrigin::DeclaredBoolean);
        r.set_closed(true);
        match parse_feature_expr("FA & FZ", &mut r) {
            Err(FeatureExprError::UnknownFeature { name, offset }) => {
                assert_eq!(name, "FZ");
                assert_eq!(offset, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn display_reparses() {
        let mut r = reg();
        let e = parse_feature_expr("!(FA | FB) & (FC | !FA)", &mut r).unwrap();
        let text = e.display(&r).to_string();
        assert_eq!(text, "!(FA | FB) & (FC | !FA)");
        assert_eq!(parse_feature_expr(&text, &mut r).unwrap(), e);
    }
}
