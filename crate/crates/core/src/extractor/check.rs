//! Per-unit name resolution: every identifier must refer to something
//! declared in the unit (globals and members are visible unit-wide, locals
//! only after their declaration).

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::ExtractError;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sym {
    Var,
    Func,
    EnumLiteral,
}

struct Checker<'a> {
    path: &'a str,
    scopes: Vec<HashMap<&'a str, Sym>>,
}

pub(crate) fn check_unit(unit: &TranslationUnit) -> Result<(), ExtractError> {
    let mut globals = HashMap::new();
    collect(&unit.items, &mut globals);
    let mut c = Checker {
        path: &unit.path,
        scopes: vec![globals],
    };
    c.items(&unit.items)
}

fn collect<'a>(items: &'a [Item], out: &mut HashMap<&'a str, Sym>) {
    for item in items {
        match item {
            Item::Enum(e) => {
                for (lit, _) in &e.literals {
                    out.insert(lit, Sym::EnumLiteral);
                }
            }
            Item::Var(v) => {
                out.insert(&v.name, Sym::Var);
            }
            Item::Func(f) => {
                out.insert(&f.name, Sym::Func);
            }
            Item::Class(_) => {}
        }
    }
}

impl<'a> Checker<'a> {
    fn items(&mut self, items: &'a [Item]) -> Result<(), ExtractError> {
        for item in items {
            match item {
                Item::Enum(_) => {}
                Item::Var(v) => {
                    if let Some(init) = &v.init {
                        self.expr(init)?;
                    }
                }
                Item::Func(f) => self.func(f)?,
                Item::Class(c) => {
                    let mut members = HashMap::new();
                    collect(&c.members, &mut members);
                    self.scopes.push(members);
                    self.items(&c.members)?;
                    self.scopes.pop();
                }
            }
        }
        Ok(())
    }

    fn func(&mut self, f: &'a FuncDef) -> Result<(), ExtractError> {
        let Some(body) = &f.body else { return Ok(()) };
        let mut params = HashMap::new();
        let mut seen = HashSet::new();
        for p in &f.params {
            if !seen.insert(p.name.as_str()) {
                return Err(ExtractError::Syntax {
                    path: self.path.to_string(),
                    pos: p.pos,
                    message: format!("duplicate parameter `{}`", p.name),
                });
            }
            params.insert(p.name.as_str(), Sym::Var);
        }
        self.scopes.push(params);
        self.block(body)?;
        self.scopes.pop();
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<Sym> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn unresolved(&self, name: &str, pos: Pos) -> ExtractError {
        ExtractError::UnresolvedIdentifier {
            path: self.path.to_string(),
            pos,
            name: name.to_string(),
        }
    }

    fn block(&mut self, b: &'a Block) -> Result<(), ExtractError> {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<(), ExtractError> {
        match &s.kind {
            StmtKind::Decl(v) => {
                if let Some(init) = &v.init {
                    self.expr(init)?;
                }
                self.scopes.last_mut().unwrap().insert(&v.name, Sym::Var);
            }
            StmtKind::Expr(e) => self.expr(e)?,
            StmtKind::If { cond, then, els } => {
                self.expr(cond)?;
                self.scoped_stmt(then)?;
                if let Some(e) = els {
                    self.scoped_stmt(e)?;
                }
            }
            StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
                self.expr(cond)?;
                self.scoped_stmt(body)?;
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    match &i.kind {
                        // declarations in the init clause scope over the loop
                        StmtKind::Block(b) => {
                            for s in &b.stmts {
                                self.stmt(s)?;
                            }
                        }
                        _ => self.stmt(i)?,
                    }
                }
                if let Some(c) = cond {
                    self.expr(c)?;
                }
                if let Some(st) = step {
                    self.expr(st)?;
                }
                self.scoped_stmt(body)?;
                self.scopes.pop();
            }
            StmtKind::Switch { scrutinee, cases } => {
                self.expr(scrutinee)?;
                self.scopes.push(HashMap::new());
                for c in cases {
                    if let Some(l) = &c.label {
                        self.expr(l)?;
                    }
                    for s in &c.body {
                        self.stmt(s)?;
                    }
                }
                self.scopes.pop();
            }
            StmtKind::Return(Some(e)) => self.expr(e)?,
            StmtKind::Block(b) => self.block(b)?,
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
        }
        Ok(())
    }

    fn scoped_stmt(&mut self, s: &'a Stmt) -> Result<(), ExtractError> {
        self.scopes.push(HashMap::new());
        let r = self.stmt(s);
        self.scopes.pop();
        r
    }

    fn expr(&mut self, e: &'a Expr) -> Result<(), ExtractError> {
        match &e.kind {
            ExprKind::Ident(name) => match self.lookup(name) {
                Some(Sym::Var | Sym::EnumLiteral) => Ok(()),
                Some(Sym::Func) | None => Err(self.unresolved(name, e.pos)),
            },
            ExprKind::Int(_) | ExprKind::Bool(_) => Ok(()),
            ExprKind::Unary(_, a) => self.expr(a),
            ExprKind::Binary(_, a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
            ExprKind::Conditional(c, a, b) => {
                self.expr(c)?;
                self.expr(a)?;
                self.expr(b)
            }
            ExprKind::Assign {
                target,
                target_pos,
                value,
                ..
            } => {
                self.expr(value)?;
                self.assignable(target, *target_pos)
            }
            ExprKind::IncDec { target, .. } => self.assignable(target, e.pos),
            ExprKind::Call { callee, args } => {
                if self.lookup(callee) != Some(Sym::Func) {
                    return Err(self.unresolved(callee, e.pos));
                }
                args.iter().try_for_each(|a| self.expr(a))
            }
        }
    }

    fn assignable(&self, name: &str, pos: Pos) -> Result<(), ExtractError> {
        match self.lookup(name) {
            Some(Sym::Var) => Ok(()),
            Some(_) => Err(ExtractError::Syntax {
                path: self.path.to_string(),
                pos,
                message: format!("`{name}` is not assignable"),
            }),
            None => Err(self.unresolved(name, pos)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_mini_c;
    use super::*;

    #[test]
    fn undeclared_global_initializer() {
        match parse_mini_c("int x = y;", "t.c") {
            Err(ExtractError::UnresolvedIdentifier { name, pos, .. }) => {
                assert_eq!(name, "y");
                assert_eq!(pos, Pos { line: 1, col: 9 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn locals_are_declare_before_use() {
        assert!(parse_mini_c("int f() { a = 1; int a; }", "t.c").is_err());
        assert!(parse_mini_c("int f() { int a; a = 1; }", "t.c").is_ok());
        assert!(parse_mini_c("int f() { { int a; } a = 1; }", "t.c").is_err());
        assert!(parse_mini_c("int f() { for (int i = 0; i < 2; i++) {} return i; }", "t.c").is_err());
    }

    #[test]
    fn globals_visible_unit_wide() {
        assert!(parse_mini_c("int f() { return g() + x; }\nint g() { return 0; }\nint x;", "t.c").is_ok());
    }

    #[test]
    fn calls_need_functions() {
        assert!(matches!(
            parse_mini_c("int x; int f() { return x(); }", "t.c"),
            Err(ExtractError::UnresolvedIdentifier { .. })
        ));
        assert!(parse_mini_c("int f() { return nope(); }", "t.c").is_err());
    }

    #[test]
    fn enum_literals_resolve_but_are_not_assignable() {
        let src = "enum E { A, B };\nenum E e;\nint f() { if (e == A) { return 1; } return 0; }";
        assert!(parse_mini_c(src, "t.c").is_ok());
        assert!(parse_mini_c("enum E { A, B };\nint f() { A = 1; }", "t.c").is_err());
    }

    #[test]
    fn class_members_visible_in_methods() {
        let src = "class A { int get() { return x; } int x = 0; };";
        assert!(parse_mini_c(src, "t.cpp").is_ok());
    }
}
