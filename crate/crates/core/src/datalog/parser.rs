use std::collections::HashMap;

use super::{Atom, CmpOp, Constraint, DatalogError, Program, RelationDecl, Rule, Term};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Directive(String),
    Punct(&'static str),
    Eof,
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, DatalogError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| DatalogError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (sl, sc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            loop {
                match chars.get(i) {
                    None => return Err(err(sl, sc, "unterminated comment".into())),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        col += 2;
                        break;
                    }
                    Some('\n') => {
                        line += 1;
                        col = 1;
                        i += 1;
                    }
                    Some(_) => {
                        i += 1;
                        col += 1;
                    }
                }
            }
            continue;
        }
        let ident_at = |j: usize| {
            let mut k = j;
            while k < chars.len() && (chars[k].is_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            k
        };
        let tok = if c.is_alphabetic() || c == '_' {
            let end = ident_at(i);
            let t = Tok::Ident(chars[i..end].iter().collect());
            col += end - i;
            i = end;
            t
        } else if c == '.' && chars.get(i + 1).is_some_and(|c| c.is_alphabetic()) {
            let end = ident_at(i + 1);
            let t = Tok::Directive(chars[i + 1..end].iter().collect());
            col += end - i;
            i = end;
            t
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(sl, sc, "unterminated string".into())),
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            Tok::Str(s)
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let p = [":-", "!=", "(", ")", ",", ":", "=", "."]
                .into_iter()
                .find(|p| rest.starts_with(p))
                .ok_or_else(|| err(sl, sc, format!("unexpected character {c:?}")))?;
            i += p.chars().count();
            col += p.chars().count();
            Tok::Punct(p)
        };
        out.push(Lexed { tok, line: sl, col: sc });
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct RawAtom {
    name: String,
    terms: Vec<RawTerm>,
    line: usize,
}

#[derive(Clone)]
enum RawTerm {
    Var(String),
    Wildcard,
    Const(String),
}

struct RawRule {
    head: RawAtom,
    body: Vec<RawAtom>,
    constraints: Vec<(RawTerm, CmpOp, RawTerm)>,
    line: usize,
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    fn error(&self, message: impl Into<String>) -> DatalogError {
        let t = &self.toks[self.pos];
        DatalogError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), DatalogError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`")))
        }
    }

    fn ident(&mut self) -> Result<String, DatalogError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn term(&mut self) -> Result<RawTerm, DatalogError> {
        let t = match self.peek() {
            Tok::Ident(s) if s == "_" => RawTerm::Wildcard,
            Tok::Ident(s) => RawTerm::Var(s.clone()),
            Tok::Str(s) => RawTerm::Const(s.clone()),
            _ => return Err(self.error("expected variable or string constant")),
        };
        self.bump();
        Ok(t)
    }

    fn atom(&mut self) -> Result<RawAtom, DatalogError> {
        let line = self.line();
        let name = self.ident()?;
        self.expect("(")?;
        let mut terms = vec![self.term()?];
        while self.eat(",") {
            terms.push(self.term()?);
        }
        self.expect(")")?;
        Ok(RawAtom { name, terms, line })
    }

    fn name_list(&mut self) -> Result<Vec<(String, usize)>, DatalogError> {
        let line = self.line();
        let mut out = vec![(self.ident()?, line)];
        while self.eat(",") {
            let line = self.line();
            out.push((self.ident()?, line));
        }
        Ok(out)
    }
}

pub(super) fn parse(text: &str) -> Result<Program, DatalogError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut decls: Vec<RelationDecl> = Vec::new();
    let mut io: Vec<(String, usize, bool)> = Vec::new();
    let mut rules = Vec::new();
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Directive(d) => {
                let line = p.line();
                p.bump();
                match d.as_str() {
                    "decl" => {
                        let name = p.ident()?;
                        p.expect("(")?;
                        let mut attributes = Vec::new();
                        loop {
                            attributes.push(p.ident()?);
                            p.expect(":")?;
                            let ty = p.ident()?;
                            if ty != "symbol" {
                                p.pos -= 1;
                                return Err(p.error(format!("unsupported attribute type `{ty}`")));
                            }
                            if !p.eat(",") {
                                break;
                            }
                        }
                        p.expect(")")?;
                        if decls.iter().any(|d| d.name == name) {
                            return Err(DatalogError::Redeclared { name, line });
                        }
                        decls.push(RelationDecl {
                            name,
                            attributes,
                            input: false,
                            output: false,
                        });
                    }
                    "input" | "output" => {
                        for (name, l) in p.name_list()? {
                            io.push((name, l, d == "input"));
                        }
                    }
                    other => {
                        p.pos -= 1;
                        return Err(p.error(format!("unknown directive `.{other}`")));
                    }
                }
            }
            Tok::Ident(_) => {
                let line = p.line();
                let head = p.atom()?;
                let mut body = Vec::new();
                let mut constraints = Vec::new();
                if p.eat(":-") {
                    loop {
                        if matches!((p.peek(), p.peek2()), (Tok::Ident(_), Tok::Punct("("))) {
                            body.push(p.atom()?);
                        } else {
                            let lhs = p.term()?;
                            let op = if p.eat("=") {
                                CmpOp::Eq
                            } else if p.eat("!=") {
                                CmpOp::Ne
                            } else {
                                return Err(p.error("expected `=` or `!=`"));
                            };
                            constraints.push((lhs, op, p.term()?));
                        }
                        if !p.eat(",") {
                            break;
                        }
                    }
                }
                p.expect(".")?;
                rules.push(RawRule {
                    head,
                    body,
                    constraints,
                    line,
                });
            }
            _ => return Err(p.error("expected a directive or a rule")),
        }
    }
    let by_name: HashMap<String, usize> = decls.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();
    for (name, line, input) in io {
        let i = *by_name
            .get(&name)
            .ok_or(DatalogError::UndeclaredRelation { name, line })?;
        if input {
            decls[i].input = true;
        } else {
            decls[i].output = true;
        }
    }
    let rules = rules
        .into_iter()
        .map(|r| resolve_rule(r, &decls, &by_name))
        .collect::<Result<_, _>>()?;
    Ok(Program::new(decls, rules))
}

fn resolve_rule(r: RawRule, decls: &[RelationDecl], by_name: &HashMap<String, usize>) -> Result<Rule, DatalogError> {
    let mut variables: Vec<String> = Vec::new();
    let var = |name: &str, variables: &mut Vec<String>| match variables.iter().position(|v| v == name) {
        Some(i) => i,
        None => {
            variables.push(name.to_string());
            variables.len() - 1
        }
    };
    let mut fresh = 0;
    let mut term = |t: &RawTerm, variables: &mut Vec<String>| match t {
        RawTerm::Var(v) => Term::Var(var(v, variables)),
        RawTerm::Wildcard => {
            fresh += 1;
            variables.push(format!("_{fresh}"));
            Term::Var(variables.len() - 1)
        }
        RawTerm::Const(c) => Term::Const(c.clone()),
    };
    let mut atom = |a: &RawAtom, variables: &mut Vec<String>| -> Result<Atom, DatalogError> {
        let relation = *by_name.get(&a.name).ok_or_else(|| DatalogError::UndeclaredRelation {
            name: a.name.clone(),
            line: a.line,
        })?;
        let expected = decls[relation].arity();
        if a.terms.len() != expected {
            return Err(DatalogError::ArityMismatch {
                name: a.name.clone(),
                expected,
                found: a.terms.len(),
                line: a.line,
            });
        }
        Ok(Atom {
            relation,
            terms: a.terms.iter().map(|t| term(t, variables)).collect(),
        })
    };
    let body = r
        .body
        .iter()
        .map(|a| atom(a, &mut variables))
        .collect::<Result<Vec<_>, _>>()?;
    let bound = variables.len();
    if r.head.terms.iter().any(|t| matches!(t, RawTerm::Wildcard)) {
        return Err(DatalogError::RangeRestriction {
            var: "_".into(),
            line: r.line,
        });
    }
    let head = atom(&r.head, &mut variables)?;
    let constraints: Vec<Constraint> = r
        .constraints
        .iter()
        .map(|(l, op, rr)| Constraint {
            lhs: term(l, &mut variables),
            op: *op,
            rhs: term(rr, &mut variables),
        })
        .collect();
    if let Some(v) = variables.get(bound) {
        return Err(DatalogError::RangeRestriction {
            var: v.clone(),
            line: r.line,
        });
    }
    Ok(Rule {
        head,
        body,
        constraints,
        variables,
        line: r.line,
    })
}
