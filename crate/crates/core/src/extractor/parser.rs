//! Recursive-descent parser for the mini-C subset.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ExtractError;

const TYPE_WORDS: &[&str] = &[
    "int", "bool", "void", "enum", "char", "short", "long", "unsigned", "signed", "const", "extern", "static",
];

struct Parser<'a> {
    toks: Vec<Token>,
    at: usize,
    path: &'a str,
}

type PResult<T> = Result<T, ExtractError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of file".into(),
        };
        Err(ExtractError::Syntax {
            path: self.path.to_string(),
            pos: self.pos(),
            message: format!("{}, found {found}", message.into()),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.error("expected identifier"),
        }
    }

    fn starts_type(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if TYPE_WORDS.contains(&s.as_str()))
    }

    // ---- declarations ----

    fn unit(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            if self.eat_punct(";") {
                continue;
            }
            self.item(&mut items, false)?;
        }
        Ok(items)
    }

    fn item(&mut self, out: &mut Vec<Item>, in_class: bool) -> PResult<()> {
        if self.is_word("enum") && matches!(self.peek_at(2), Tok::Punct("{")) {
            out.push(Item::Enum(self.enum_decl()?));
            return Ok(());
        }
        if !in_class && (self.is_word("class") || self.is_word("struct")) {
            out.push(Item::Class(self.class_decl()?));
            return Ok(());
        }
        if in_class && (self.is_word("public") || self.is_word("private") || self.is_word("protected")) {
            self.bump();
            return self.expect_punct(":");
        }
        if !self.starts_type() {
            return self.error("expected a declaration");
        }
        let (ty, is_extern, is_const) = self.decl_specifiers()?;
        let (name, pos) = self.ident()?;
        if self.is_punct("(") {
            out.push(Item::Func(self.func_rest(ty, name, pos)?));
            return Ok(());
        }
        for d in self.declarators(ty, is_extern, is_const, name, pos)? {
            out.push(Item::Var(d));
        }
        Ok(())
    }

    fn enum_decl(&mut self) -> PResult<EnumDecl> {
        let pos = self.pos();
        self.bump(); // enum
        let (name, _) = self.ident()?;
        self.expect_punct("{")?;
        let mut literals = Vec::new();
        while !self.is_punct("}") {
            literals.push(self.ident()?);
            if self.eat_punct("=") {
                // explicit values carry no meaning for extraction
                self.conditional()?;
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("}")?;
        self.expect_punct(";")?;
        Ok(EnumDecl { name, literals, pos })
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let pos = self.pos();
        self.bump(); // class / struct
        let (name, _) = self.ident()?;
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.error("expected `}`");
            }
            if self.eat_punct(";") {
                continue;
            }
            self.item(&mut members, true)?;
        }
        self.expect_punct("}")?;
        self.eat_punct(";");
        Ok(ClassDecl { name, members, pos })
    }

    /// Qualifiers and base type: `[extern|static|const]* type [const]`.
    fn decl_specifiers(&mut self) -> PResult<(Type, bool, bool)> {
        let (mut is_extern, mut is_const) = (false, false);
        let mut ty = None;
        while let Tok::Ident(w) = self.peek().clone() {
            match w.as_str() {
                "extern" => is_extern = true,
                "static" => {}
                "const" => is_const = true,
                "int" | "char" | "short" | "long" | "unsigned" | "signed" => {
                    if matches!(ty, Some(Type::Bool | Type::Void | Type::Enum(_))) {
                        return self.error("conflicting type specifiers");
                    }
                    ty = Some(Type::Int)
                }
                "bool" | "_Bool" | "void" if ty.is_some() => return self.error("conflicting type specifiers"),
                "bool" | "_Bool" => ty = Some(Type::Bool),
                "void" => ty = Some(Type::Void),
                "enum" if ty.is_none() => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    ty = Some(Type::Enum(name));
                    continue;
                }
                _ => break,
            }
            self.bump();
        }
        match ty {
            Some(t) => Ok((t, is_extern, is_const)),
            None => self.error("expected a type"),
        }
    }

    /// The rest of `T a [= e], b [= e];` after the first name.
    fn declarators(
        &mut self,
        ty: Type,
        is_extern: bool,
        is_const: bool,
        first: String,
        first_pos: Pos,
    ) -> PResult<Vec<VarDecl>> {
        let mut out = Vec::new();
        let (mut name, mut pos) = (first, first_pos);
        loop {
            if ty == Type::Void {
                return Err(ExtractError::Syntax {
                    path: self.path.to_string(),
                    pos,
                    message: format!("variable `{name}` declared void"),
                });
            }
            let init = if self.eat_punct("=") {
                Some(self.assignment()?)
            } else {
                None
            };
            out.push(VarDecl {
                name,
                ty: ty.clone(),
                is_extern,
                is_const,
                init,
                pos,
            });
            if !self.eat_punct(",") {
                break;
            }
            (name, pos) = self.ident()?;
        }
        self.expect_punct(";")?;
        Ok(out)
    }

    fn func_rest(&mut self, ret: Type, name: String, pos: Pos) -> PResult<FuncDef> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.is_word("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.bump();
        }
        while !self.is_punct(")") {
            let ppos = self.pos();
            let (ty, _, _) = self.decl_specifiers()?;
            let name = match self.peek() {
                Tok::Ident(_) => self.ident()?.0,
                _ => format!("arg{}", params.len()),
            };
            params.push(Param { name, ty, pos: ppos });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        let body = if self.eat_punct(";") { None } else { Some(self.block()?) };
        Ok(FuncDef {
            name,
            ret,
            params,
            body,
            pos,
        })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        let pos = self.pos();
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.error("expected `}`");
            }
            self.stmt_into(&mut stmts)?;
        }
        self.bump();
        Ok(Block { stmts, pos })
    }

    /// Declarations may expand to several statements.
    fn stmt_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        if self.starts_type() {
            let (ty, ext, cst) = self.decl_specifiers()?;
            let (name, pos) = self.ident()?;
            for d in self.declarators(ty, ext, cst, name, pos)? {
                let pos = d.pos;
                out.push(Stmt {
                    kind: StmtKind::Decl(d),
                    pos,
                });
            }
            return Ok(());
        }
        out.push(self.stmt()?);
        Ok(())
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Punct("{") => StmtKind::Block(self.block()?),
            Tok::Punct(";") => {
                self.bump();
                StmtKind::Empty
            }
            Tok::Ident(w) => match w.as_str() {
                "if" => {
                    self.bump();
                    let cond = self.paren_expr()?;
                    let then = Box::new(self.sub_stmt()?);
                    let els = if self.eat_word("else") {
                        Some(Box::new(self.sub_stmt()?))
                    } else {
                        None
                    };
                    StmtKind::If { cond, then, els }
                }
                "while" => {
                    self.bump();
                    let cond = self.paren_expr()?;
                    StmtKind::While {
                        cond,
                        body: Box::new(self.sub_stmt()?),
                    }
                }
                "do" => {
                    self.bump();
                    let body = Box::new(self.sub_stmt()?);
                    if !self.eat_word("while") {
                        return self.error("expected `while`");
                    }
                    let cond = self.paren_expr()?;
                    self.expect_punct(";")?;
                    StmtKind::DoWhile { body, cond }
                }
                "for" => self.for_stmt()?,
                "switch" => self.switch_stmt()?,
                "return" => {
                    self.bump();
                    let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    StmtKind::Return(value)
                }
                "break" => {
                    self.bump();
                    self.expect_punct(";")?;
                    StmtKind::Break
                }
                "continue" => {
                    self.bump();
                    self.expect_punct(";")?;
                    StmtKind::Continue
                }
                _ => self.expr_stmt()?,
            },
            _ => self.expr_stmt()?,
        };
        Ok(Stmt { kind, pos })
    }

    /// A controlled statement; a bare declaration is wrapped in a block.
    fn sub_stmt(&mut self) -> PResult<Stmt> {
        if self.starts_type() {
            let pos = self.pos();
            let mut stmts = Vec::new();
            self.stmt_into(&mut stmts)?;
            return Ok(Stmt {
                kind: StmtKind::Block(Block { stmts, pos }),
                pos,
            });
        }
        self.stmt()
    }

    fn expr_stmt(&mut self) -> PResult<StmtKind> {
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(StmtKind::Expr(e))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let e = self.expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn for_stmt(&mut self) -> PResult<StmtKind> {
        self.bump();
        self.expect_punct("(")?;
        let init = if self.eat_punct(";") {
            None
        } else if self.starts_type() {
            let pos = self.pos();
            let mut stmts = Vec::new();
            self.stmt_into(&mut stmts)?;
            Some(Box::new(Stmt {
                kind: StmtKind::Block(Block { stmts, pos }),
                pos,
            }))
        } else {
            let pos = self.pos();
            let e = self.expr()?;
            self.expect_punct(";")?;
            Some(Box::new(Stmt {
                kind: StmtKind::Expr(e),
                pos,
            }))
        };
        let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
        self.expect_punct(";")?;
        let step = if self.is_punct(")") { None } else { Some(self.expr()?) };
        self.expect_punct(")")?;
        let body = Box::new(self.sub_stmt()?);
        Ok(StmtKind::For { init, cond, step, body })
    }

    fn switch_stmt(&mut self) -> PResult<StmtKind> {
        self.bump();
        let scrutinee = self.paren_expr()?;
        self.expect_punct("{")?;
        let mut cases: Vec<Case> = Vec::new();
        while !self.is_punct("}") {
            let pos = self.pos();
            if self.eat_word("case") {
                let label = self.conditional()?;
                self.expect_punct(":")?;
                cases.push(Case {
                    label: Some(label),
                    body: Vec::new(),
                    pos,
                });
            } else if self.eat_word("default") {
                self.expect_punct(":")?;
                cases.push(Case {
                    label: None,
                    body: Vec::new(),
                    pos,
                });
            } else if *self.peek() == Tok::Eof {
                return self.error("expected `}`");
            } else {
                let Some(current) = cases.last_mut() else {
                    return self.error("expected `case` or `default`");
                };
                let mut body = std::mem::take(&mut current.body);
                self.stmt_into(&mut body)?;
                cases.last_mut().unwrap().body = body;
            }
        }
        self.bump();
        Ok(StmtKind::Switch { scrutinee, cases })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.conditional()?;
        let op = match self.peek() {
            Tok::Punct("=") => None,
            Tok::Punct("+=") => Some(BinOp::Add),
            Tok::Punct("-=") => Some(BinOp::Sub),
            Tok::Punct("*=") => Some(BinOp::Mul),
            Tok::Punct("/=") => Some(BinOp::Div),
            Tok::Punct("%=") => Some(BinOp::Rem),
            Tok::Punct("&=") => Some(BinOp::BitAnd),
            Tok::Punct("|=") => Some(BinOp::BitOr),
            Tok::Punct("^=") => Some(BinOp::BitXor),
            Tok::Punct("<<=") => Some(BinOp::Shl),
            Tok::Punct(">>=") => Some(BinOp::Shr),
            _ => return Ok(lhs),
        };
        let ExprKind::Ident(target) = lhs.kind else {
            return self.error("assignment target must be a variable");
        };
        self.bump();
        let value = self.assignment()?;
        Ok(Expr {
            kind: ExprKind::Assign {
                op,
                target,
                target_pos: lhs.pos,
                value: Box::new(value),
            },
            pos: lhs.pos,
        })
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let c = self.binary(0)?;
        if self.eat_punct("?") {
            let a = self.expr()?;
            self.expect_punct(":")?;
            let b = self.conditional()?;
            let pos = c.pos;
            return Ok(Expr {
                kind: ExprKind::Conditional(Box::new(c), Box::new(a), Box::new(b)),
                pos,
            });
        }
        Ok(c)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("|", BinOp::BitOr)],
            &[("^", BinOp::BitXor)],
            &[("&", BinOp::BitAnd)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("<", BinOp::Lt), ("<=", BinOp::Le), (">", BinOp::Gt), (">=", BinOp::Ge)],
            &[("<<", BinOp::Shl), (">>", BinOp::Shr)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.is_punct(sym) {
                    self.bump();
                    let rhs = self.binary(level + 1)?;
                    let pos = lhs.pos;
                    lhs = Expr {
                        kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)),
                        pos,
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Punct("!") => UnOp::Not,
            Tok::Punct("-") => UnOp::Neg,
            Tok::Punct("+") => UnOp::Plus,
            Tok::Punct("~") => UnOp::BitNot,
            Tok::Punct(p @ ("++" | "--")) => {
                let increment = *p == "++";
                self.bump();
                let (target, _) = self.ident()?;
                return Ok(Expr {
                    kind: ExprKind::IncDec {
                        increment,
                        prefix: true,
                        target,
                    },
                    pos,
                });
            }
            _ => return self.postfix(),
        };
        self.bump();
        let e = self.unary()?;
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(e)),
            pos,
        })
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::Punct("(") => {
                    let ExprKind::Ident(callee) = &e.kind else {
                        return self.error("only named functions can be called");
                    };
                    let callee = callee.clone();
                    self.bump();
                    let mut args = Vec::new();
                    while !self.is_punct(")") {
                        args.push(self.assignment()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct(")")?;
                    e = Expr {
                        kind: ExprKind::Call { callee, args },
                        pos: e.pos,
                    };
                }
                Tok::Punct(p @ ("++" | "--")) => {
                    let increment = *p == "++";
                    let ExprKind::Ident(target) = &e.kind else {
                        return self.error("increment target must be a variable");
                    };
                    let target = target.clone();
                    self.bump();
                    e = Expr {
                        kind: ExprKind::IncDec {
                            increment,
                            prefix: false,
                            target,
                        },
                        pos: e.pos,
                    };
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                ExprKind::Int(i)
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                ExprKind::Bool(w == "true")
            }
            Tok::Ident(_) => ExprKind::Ident(self.ident()?.0),
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                return Ok(e);
            }
            _ => return self.error("expected an expression"),
        };
        Ok(Expr { kind, pos })
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "if" | "else"
            | "while"
            | "do"
            | "for"
            | "switch"
            | "case"
            | "default"
            | "return"
            | "break"
            | "continue"
            | "class"
            | "struct"
            | "enum"
            | "true"
            | "false"
    ) || TYPE_WORDS.contains(&s)
}

/// Parses one translation unit. Identifier resolution is checked separately.
pub(crate) fn parse_unit(text: &str, path: &str) -> Result<TranslationUnit, ExtractError> {
    let toks = tokenize(text, path)?;
    let mut p = Parser { toks, at: 0, path };
    let items = p.unit()?;
    Ok(TranslationUnit {
        path: path.to_string(),
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> TranslationUnit {
        parse_unit(src, "t.c").unwrap_or_else(|e| panic!("{e}"))
    }

    #[test]
    fn empty_unit() {
        assert!(parse("").items.is_empty());
        assert!(parse("  // nothing\n").items.is_empty());
    }

    #[test]
    fn globals_and_enums() {
        let u = parse("enum FeatSet { Feat0, Feat1, Feat2, Feat3 };\nextern const enum FeatSet x;\nint a = 1, b;");
        assert_eq!(u.items.len(), 4);
        let Item::Enum(e) = &u.items[0] else { panic!() };
        assert_eq!(e.literals.len(), 4);
        let Item::Var(v) = &u.items[1] else { panic!() };
        assert!(v.is_extern && v.is_const);
        assert_eq!(v.ty, Type::Enum("FeatSet".into()));
    }

    #[test]
    fn assignments_nest() {
        let u = parse("int f() { x = (++g) * 2; y += 1; z--; }");
        let Item::Func(f) = &u.items[0] else { panic!() };
        let stmts = &f.body.as_ref().unwrap().stmts;
        assert_eq!(stmts.len(), 3);
        let StmtKind::Expr(Expr {
            kind: ExprKind::Assign { target, value, op, .. },
            ..
        }) = &stmts[0].kind
        else {
            panic!()
        };
        assert_eq!(target, "x");
        assert_eq!(*op, None);
        let ExprKind::Binary(BinOp::Mul, lhs, _) = &value.kind else {
            panic!()
        };
        assert!(matches!(
            lhs.kind,
            ExprKind::IncDec {
                prefix: true,
                increment: true,
                ..
            }
        ));
    }

    #[test]
    fn control_flow() {
        let u = parse(
            "void f(int a) {\n\
               for (int i = 0; i < a; i++) { g(i); }\n\
               switch (a) { case 1: case 2: g(a); break; default: ; }\n\
               do { a--; } while (a > 0);\n\
               if (a) g(a); else if (!a) g(0);\n\
             }",
        );
        let Item::Func(f) = &u.items[0] else { panic!() };
        let stmts = &f.body.as_ref().unwrap().stmts;
        assert_eq!(stmts.len(), 4);
        let StmtKind::Switch { cases, .. } = &stmts[1].kind else {
            panic!()
        };
        assert_eq!(cases.len(), 3);
        assert!(cases[0].body.is_empty());
        assert_eq!(cases[1].body.len(), 2);
    }

    #[test]
    fn classes_group_members() {
        let u = parse("class A {\n public:\n int x = 0;\n int get() { return x; }\n};");
        let Item::Class(c) = &u.items[0] else { panic!() };
        assert_eq!(c.name, "A");
        assert_eq!(c.members.len(), 2);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_unit("int f() {\n  x = ;\n}", "t.c") {
            Err(ExtractError::Syntax { pos, .. }) => assert_eq!(pos, Pos { line: 2, col: 7 }),
            other => panic!("{other:?}"),
        }
        assert!(parse_unit("int f() { 3 = x; }", "t.c").is_err());
        assert!(parse_unit("int f() {", "t.c").is_err());
    }
}
