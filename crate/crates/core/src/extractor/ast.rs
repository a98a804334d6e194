//! Syntax tree for the mini-C input language.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Type {
    Int,
    Bool,
    Void,
    Enum(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationUnit {
    pub path: String,
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Enum(EnumDecl),
    Var(VarDecl),
    Func(FuncDef),
    Class(ClassDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumDecl {
    pub name: String,
    pub literals: Vec<(String, Pos)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: Type,
    pub is_extern: bool,
    pub is_const: bool,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub pos: Pos,
}

/// A function definition, or a prototype when `body` is `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuncDef {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Param>,
    pub body: Option<Block>,
    pub pos: Pos,
}

/// A named container grouping variables and functions (`class`/`struct`).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub members: Vec<Item>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl(VarDecl),
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    DoWhile {
        body: Box<Stmt>,
        cond: Expr,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
    },
    Switch {
        scrutinee: Expr,
        cases: Vec<Case>,
    },
    Return(Option<Expr>),
    Break,
    Continue,
    Block(Block),
    Empty,
}

/// One `case`/`default` arm; `label` is `None` for `default`.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub label: Option<Expr>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
    Plus,
    BitNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn comparison_symbol(self) -> Option<&'static str> {
        Some(match self {
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            _ => return None,
        })
    }
}

/// `None` is plain `=`; compound assignments carry their operator.
pub type AssignOp = Option<BinOp>;

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Int(i64),
    Bool(bool),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Conditional(Box<Expr>, Box<Expr>, Box<Expr>),
    Assign {
        op: AssignOp,
        target: String,
        target_pos: Pos,
        value: Box<Expr>,
    },
    IncDec {
        increment: bool,
        prefix: bool,
        target: String,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    /// Calls `f` on every identifier occurrence, including assignment targets.
    pub fn visit_idents<'a>(&'a self, f: &mut impl FnMut(&'a str, Pos)) {
        match &self.kind {
            ExprKind::Ident(name) => f(name, self.pos),
            ExprKind::Int(_) | ExprKind::Bool(_) => {}
            ExprKind::Unary(_, e) => e.visit_idents(f),
            ExprKind::Binary(_, a, b) => {
                a.visit_idents(f);
                b.visit_idents(f);
            }
            ExprKind::Conditional(c, a, b) => {
                c.visit_idents(f);
                a.visit_idents(f);
                b.visit_idents(f);
            }
            ExprKind::Assign {
                target,
                target_pos,
                value,
                ..
            } => {
                f(target, *target_pos);
                value.visit_idents(f);
            }
            ExprKind::IncDec { target, .. } => f(target, self.pos),
            ExprKind::Call { args, .. } => {
                for a in args {
                    a.visit_idents(f);
                }
            }
        }
    }
}
