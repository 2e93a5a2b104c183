//! Recursive-descent parser for the contract language.

use std::collections::BTreeSet;

use super::ast::{BinOp, Cond, Contract, Decl, DeclKind, Expr, FunctionDef, SourceLoc, Stmt};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::metrics::{CmpOp, Signedness};

const KEYWORDS: &[&str] = &[
    "contract", "var", "fn", "init", "let", "push", "pop", "require", "assert", "if", "else", "while", "return",
    "halt", "sender", "len",
];

/// Parses contract source text.
pub fn parse_contract(src: &str) -> Result<Contract, ParseError> {
    let toks = tokenize(src)?;
    Parser::new(toks).contract()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    decls: Vec<Decl>,
    literals: BTreeSet<i64>,
    // Per-function state.
    scopes: Vec<Vec<(String, usize)>>,
    next_local: usize,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Self {
            toks,
            pos: 0,
            decls: Vec::new(),
            literals: BTreeSet::new(),
            scopes: Vec::new(),
            next_local: 0,
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let idx = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::syntax(t.loc, format!("expected {expected}, found {}", t.tok.describe()))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<SourceLoc, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump().loc)
        } else {
            Err(self.error_here(what))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<SourceLoc, ParseError> {
        if self.is_keyword(kw) {
            Ok(self.bump().loc)
        } else {
            Err(self.error_here(&format!("`{kw}`")))
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, SourceLoc), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let t = self.bump();
                match t.tok {
                    Tok::Ident(s) => Ok((s, t.loc)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn contract(mut self) -> Result<Contract, ParseError> {
        self.expect_keyword("contract")?;
        let (name, _) = self.name("contract name")?;
        self.expect(Tok::LBrace, "`{`")?;

        let mut next_slot = 0u64;
        while self.is_keyword("var") {
            let decl = self.decl(next_slot)?;
            next_slot += 1;
            self.decls.push(decl);
        }

        let mut functions: Vec<FunctionDef> = Vec::new();
        let mut init: Option<FunctionDef> = None;
        while self.is_keyword("fn") {
            self.bump();
            if self.is_keyword("init") {
                let loc = self.bump().loc;
                if init.is_some() {
                    return Err(ParseError::Duplicate {
                        name: "init".into(),
                        loc,
                    });
                }
                self.expect(Tok::LParen, "`(`")?;
                if self.peek().tok != Tok::RParen {
                    return Err(self.error_here("`)` (init takes no parameters)"));
                }
                self.bump();
                init = Some(self.function_body("init".into(), Vec::new(), loc)?);
            } else {
                let (fname, loc) = self.name("function name")?;
                if functions.iter().any(|f| f.name == fname) {
                    return Err(ParseError::Duplicate { name: fname, loc });
                }
                let params = self.params()?;
                functions.push(self.function_body(fname, params, loc)?);
            }
        }

        if self.is_keyword("var") {
            return Err(ParseError::syntax(
                self.peek().loc,
                "variable declarations must precede functions",
            ));
        }
        self.expect(Tok::RBrace, "`fn` or `}`")?;
        if self.peek().tok != Tok::Eof {
            return Err(self.error_here("end of input"));
        }

        Ok(Contract {
            name,
            decls: self.decls,
            functions,
            init,
            literals: self.literals.into_iter().collect(),
        })
    }

    fn decl(&mut self, slot: u64) -> Result<Decl, ParseError> {
        self.expect_keyword("var")?;
        let (name, loc) = self.name("variable name")?;
        if self.decls.iter().any(|d| d.name == name) {
            return Err(ParseError::Duplicate { name, loc });
        }
        let mut kind = DeclKind::Scalar;
        let mut initializer = None;
        match self.peek().tok {
            Tok::LBracket => {
                self.bump();
                self.expect(Tok::RBracket, "`]`")?;
                kind = DeclKind::Array;
            }
            Tok::Assign => {
                self.bump();
                initializer = Some(self.int_literal()?);
            }
            _ => {}
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(Decl {
            name,
            kind,
            slot,
            initializer,
            loc,
        })
    }

    fn int_literal(&mut self) -> Result<i64, ParseError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let t = self.bump();
        let Tok::Int(mag) = t.tok else {
            return Err(ParseError::syntax(
                t.loc,
                format!("expected integer literal, found {}", t.tok.describe()),
            ));
        };
        let value = if negative {
            if mag > 1u128 << 63 {
                return Err(ParseError::syntax(t.loc, "integer literal out of range"));
            }
            (mag as i128).wrapping_neg() as i64
        } else {
            if mag > u64::MAX as u128 {
                return Err(ParseError::syntax(t.loc, "integer literal out of range"));
            }
            mag as u64 as i64
        };
        self.literals.insert(value);
        Ok(value)
    }

    fn params(&mut self) -> Result<Vec<(String, SourceLoc)>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params: Vec<(String, SourceLoc)> = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let (p, loc) = self.name("parameter name")?;
                if params.iter().any(|(q, _)| *q == p) || self.decls.iter().any(|d| d.name == p) {
                    return Err(ParseError::Duplicate { name: p, loc });
                }
                params.push((p, loc));
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        Ok(params)
    }

    fn function_body(
        &mut self,
        name: String,
        params: Vec<(String, SourceLoc)>,
        loc: SourceLoc,
    ) -> Result<FunctionDef, ParseError> {
        self.next_local = params.len();
        self.scopes = vec![params.iter().enumerate().map(|(i, (p, _))| (p.clone(), i)).collect()];
        let body = self.block()?;
        let frame_size = self.next_local;
        self.scopes.clear();
        Ok(FunctionDef {
            name,
            params: params.into_iter().map(|(p, _)| p).collect(),
            frame_size,
            body,
            loc,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        self.scopes.push(Vec::new());
        let mut stmts = Vec::new();
        while self.peek().tok != Tok::RBrace {
            if self.peek().tok == Tok::Eof {
                return Err(self.error_here("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        self.scopes.pop();
        Ok(stmts)
    }

    fn lookup_local(&self, name: &str) -> Option<usize> {
        self.scopes
            .iter()
            .rev()
            .flat_map(|s| s.iter().rev())
            .find(|(n, _)| n == name)
            .map(|(_, i)| *i)
    }

    fn array_base(&self, name: &str, loc: SourceLoc) -> Result<u64, ParseError> {
        match self.decls.iter().find(|d| d.name == name) {
            Some(d) if d.kind == DeclKind::Array => Ok(d.slot),
            Some(_) => Err(ParseError::scope(loc, format!("`{name}` is not an array"))),
            None => Err(ParseError::scope(loc, format!("unknown array `{name}`"))),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.peek().loc;
        let word = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.error_here("statement")),
        };
        match word.as_str() {
            "let" => {
                self.bump();
                let (name, name_loc) = self.name("local name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                if self.lookup_local(&name).is_some() || self.decls.iter().any(|d| d.name == name) {
                    return Err(ParseError::Duplicate { name, loc: name_loc });
                }
                let local = self.next_local;
                self.next_local += 1;
                self.scopes.last_mut().expect("inside a block").push((name, local));
                Ok(Stmt::Let { local, value, loc })
            }
            "push" => {
                self.bump();
                let (name, nloc) = self.name("array name")?;
                let base = self.array_base(&name, nloc)?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Push { base, value, loc })
            }
            "pop" => {
                self.bump();
                let (name, nloc) = self.name("array name")?;
                let base = self.array_base(&name, nloc)?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Pop { base, loc })
            }
            "require" | "assert" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.cond()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(if word == "require" {
                    Stmt::Require { cond, loc }
                } else {
                    Stmt::Assert { cond, loc }
                })
            }
            "if" => self.if_stmt(),
            "while" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.cond()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body, loc })
            }
            "return" => {
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Return { value, loc })
            }
            "halt" => {
                self.bump();
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt::Halt { loc })
            }
            w if KEYWORDS.contains(&w) => Err(self.error_here("statement")),
            _ => {
                let (name, nloc) = self.name("statement")?;
                if self.peek().tok == Tok::LBracket {
                    let base = self.array_base(&name, nloc)?;
                    self.bump();
                    let index = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    self.expect(Tok::Assign, "`=`")?;
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    return Ok(Stmt::AssignIndex {
                        base,
                        index,
                        value,
                        loc,
                    });
                }
                self.expect(Tok::Assign, "`=` or `[`")?;
                let value = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                if let Some(local) = self.lookup_local(&name) {
                    return Ok(Stmt::AssignLocal { local, value, loc });
                }
                match self.decls.iter().find(|d| d.name == name) {
                    Some(d) if d.kind == DeclKind::Scalar => Ok(Stmt::AssignScalar {
                        slot: d.slot,
                        value,
                        loc,
                    }),
                    Some(_) => Err(ParseError::scope(
                        nloc,
                        format!("cannot assign to array `{name}` as a whole"),
                    )),
                    None => Err(ParseError::scope(nloc, format!("unknown variable `{name}`"))),
                }
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.expect_keyword("if")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.cond()?;
        self.expect(Tok::RParen, "`)`")?;
        let then_body = self.block()?;
        let else_body = if self.is_keyword("else") {
            self.bump();
            if self.is_keyword("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If {
            cond,
            then_body,
            else_body,
            loc,
        })
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let lhs = self.expr()?;
        let t = self.peek().clone();
        let (op, signedness) = match t.tok {
            Tok::EqEq => (CmpOp::Eq, Signedness::Signed),
            Tok::NotEq => (CmpOp::Ne, Signedness::Signed),
            Tok::Lt => (CmpOp::Lt, Signedness::Signed),
            Tok::Le => (CmpOp::Le, Signedness::Signed),
            Tok::Gt => (CmpOp::Gt, Signedness::Signed),
            Tok::Ge => (CmpOp::Ge, Signedness::Signed),
            Tok::LtU => (CmpOp::Lt, Signedness::Unsigned),
            Tok::LeU => (CmpOp::Le, Signedness::Unsigned),
            Tok::GtU => (CmpOp::Gt, Signedness::Unsigned),
            Tok::GeU => (CmpOp::Ge, Signedness::Unsigned),
            _ => return Err(self.error_here("comparison operator")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond {
            op,
            signedness,
            lhs,
            rhs,
            loc: t.loc,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let loc = self.bump().loc;
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Rem,
                _ => return Ok(lhs),
            };
            let loc = self.bump().loc;
            let rhs = self.primary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(_) => Ok(Expr::Int(self.int_literal()?)),
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => Ok(Expr::Int(self.int_literal()?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(w) if w == "sender" => {
                self.bump();
                Ok(Expr::Sender)
            }
            Tok::Ident(w) if w == "len" => {
                self.bump();
                let (name, nloc) = self.name("array name")?;
                Ok(Expr::Len(self.array_base(&name, nloc)?))
            }
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => {
                let (name, nloc) = self.name("expression")?;
                if self.peek().tok == Tok::LBracket {
                    let base = self.array_base(&name, nloc)?;
                    self.bump();
                    let index = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    return Ok(Expr::Index {
                        base,
                        index: Box::new(index),
                    });
                }
                if let Some(local) = self.lookup_local(&name) {
                    return Ok(Expr::Local(local));
                }
                match self.decls.iter().find(|d| d.name == name) {
                    Some(d) if d.kind == DeclKind::Scalar => Ok(Expr::Scalar(d.slot)),
                    Some(_) => Err(ParseError::scope(
                        nloc,
                        format!("array `{name}` used as a value; use `len {name}` or `{name}[i]`"),
                    )),
                    None => Err(ParseError::scope(nloc, format!("unknown variable `{name}`"))),
                }
            }
            _ => Err(self.error_here("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_contract() {
        let c = parse_contract("contract E { }").unwrap();
        assert_eq!(c.name, "E");
        assert!(c.functions.is_empty());
        assert!(c.decls.is_empty());
        assert!(c.init.is_none());
    }

    #[test]
    fn malformed_comparison_is_reported_at_its_position() {
        let err = parse_contract("contract C { fn f(a){ if (a < ) {} } }").unwrap_err();
        match err {
            ParseError::Syntax { loc, .. } => assert_eq!(loc, SourceLoc::new(1, 31)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slots_follow_declaration_order() {
        let c = parse_contract("contract W { var owner; var codes[]; var n = 5; }").unwrap();
        let slots: Vec<_> = c.decls.iter().map(|d| (d.name.as_str(), d.slot, d.kind)).collect();
        assert_eq!(
            slots,
            vec![
                ("owner", 0, DeclKind::Scalar),
                ("codes", 1, DeclKind::Array),
                ("n", 2, DeclKind::Scalar)
            ]
        );
        assert_eq!(c.decls[2].initializer, Some(5));
    }

    #[test]
    fn duplicate_declarations() {
        for src in [
            "contract C { var x; var x; }",
            "contract C { fn f() {} fn f() {} }",
            "contract C { fn f(a, a) {} }",
            "contract C { var x; fn f(x) {} }",
            "contract C { fn f(a) { let a = 1; } }",
            "contract C { fn f() { let b = 1; if (b == 1) { let b = 2; } } }",
            "contract C { fn init() {} fn init() {} }",
        ] {
            assert!(
                matches!(parse_contract(src), Err(ParseError::Duplicate { .. })),
                "{src}"
            );
        }
    }

    #[test]
    fn scope_violations() {
        for src in [
            "contract C { fn f() { return y; } }",
            "contract C { var a[]; fn f() { a = 1; } }",
            "contract C { var x; fn f() { push x 1; } }",
            "contract C { var x; fn f() { return len x; } }",
            "contract C { var a[]; fn f() { return a; } }",
            "contract C { fn f() { if (1 == 1) { let t = 1; } return t; } }",
        ] {
            assert!(
                matches!(parse_contract(src), Err(ParseError::Scope { .. })),
                "{src}: {:?}",
                parse_contract(src)
            );
        }
    }

    #[test]
    fn sibling_blocks_may_reuse_names() {
        parse_contract("contract C { fn f(a) { if (a == 1) { let t = 1; } else { let t = 2; } } }").unwrap();
    }

    #[test]
    fn literals_are_harvested_with_sign() {
        let c = parse_contract("contract C { fn f(a) { if (a == 42) { return -7; } return 0; } }").unwrap();
        assert_eq!(c.literals, vec![-7, 0, 42]);
    }

    #[test]
    fn init_cannot_take_parameters() {
        assert!(parse_contract("contract C { fn init(a) {} }").is_err());
    }

    #[test]
    fn operator_precedence() {
        let c = parse_contract("contract C { fn f() { return 1 + 2 * 3; } }").unwrap();
        match &c.functions[0].body[0] {
            Stmt::Return {
                value: Expr::Binary { op, rhs, .. },
                ..
            } => {
                assert_eq!(*op, BinOp::Add);
                assert!(matches!(**rhs, Expr::Binary { op: BinOp::Mul, .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn literal_range() {
        assert!(parse_contract("contract C { fn f() { return 18446744073709551615; } }").is_ok());
        assert!(parse_contract("contract C { fn f() { return 18446744073709551616; } }").is_err());
        assert!(parse_contract("contract C { fn f() { return -9223372036854775808; } }").is_ok());
        assert!(parse_contract("contract C { fn f() { return -9223372036854775809; } }").is_err());
    }
}
