//! Resolved syntax tree produced by the parser.
//!
//! Names are resolved at parse time: locals become frame indices and
//! persistent variables become storage slots, so the interpreter never
//! looks anything up by string.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::{CmpOp, Signedness};

/// Line and column (both 1-based) of a statement, condition or operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLoc {
    pub line: u32,
    pub col: u32,
}

impl SourceLoc {
    pub const fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl std::str::FromStr for SourceLoc {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (line, col) = s
            .split_once(':')
            .ok_or_else(|| format!("expected line:col, got {s:?}"))?;
        Ok(Self {
            line: line.parse().map_err(|e| format!("bad line in {s:?}: {e}"))?,
            col: col.parse().map_err(|e| format!("bad column in {s:?}: {e}"))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Local(usize),
    /// Read of a persistent scalar.
    Scalar(u64),
    Sender,
    /// Length of the array whose length lives at the given base slot.
    Len(u64),
    /// Array element read; the element address is `base + 1 + index`.
    Index {
        base: u64,
        index: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        /// Location of the operator token.
        loc: SourceLoc,
    },
}

/// A branch condition: exactly one comparison of two integer expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cond {
    pub op: CmpOp,
    pub signedness: Signedness,
    pub lhs: Expr,
    pub rhs: Expr,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let {
        local: usize,
        value: Expr,
        loc: SourceLoc,
    },
    AssignLocal {
        local: usize,
        value: Expr,
        loc: SourceLoc,
    },
    AssignScalar {
        slot: u64,
        value: Expr,
        loc: SourceLoc,
    },
    AssignIndex {
        base: u64,
        index: Expr,
        value: Expr,
        loc: SourceLoc,
    },
    Push {
        base: u64,
        value: Expr,
        loc: SourceLoc,
    },
    Pop {
        base: u64,
        loc: SourceLoc,
    },
    Require {
        cond: Cond,
        loc: SourceLoc,
    },
    Assert {
        cond: Cond,
        loc: SourceLoc,
    },
    If {
        cond: Cond,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
        loc: SourceLoc,
    },
    While {
        cond: Cond,
        body: Vec<Stmt>,
        loc: SourceLoc,
    },
    Return {
        value: Expr,
        loc: SourceLoc,
    },
    Halt {
        loc: SourceLoc,
    },
}

impl Stmt {
    pub fn loc(&self) -> SourceLoc {
        match self {
            Stmt::Let { loc, .. }
            | Stmt::AssignLocal { loc, .. }
            | Stmt::AssignScalar { loc, .. }
            | Stmt::AssignIndex { loc, .. }
            | Stmt::Push { loc, .. }
            | Stmt::Pop { loc, .. }
            | Stmt::Require { loc, .. }
            | Stmt::Assert { loc, .. }
            | Stmt::If { loc, .. }
            | Stmt::While { loc, .. }
            | Stmt::Return { loc, .. }
            | Stmt::Halt { loc } => *loc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclKind {
    Scalar,
    Array,
}

/// A persistent variable declaration with its assigned storage slot.
///
/// For arrays `slot` is the base slot holding the unsigned length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub kind: DeclKind,
    pub slot: u64,
    pub initializer: Option<i64>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    /// Number of local slots the frame needs (parameters first).
    pub frame_size: usize,
    pub body: Vec<Stmt>,
    pub loc: SourceLoc,
}

impl FunctionDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// A parsed contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub name: String,
    pub decls: Vec<Decl>,
    pub functions: Vec<FunctionDef>,
    pub init: Option<FunctionDef>,
    /// Every integer literal in the source, sorted and deduplicated.
    pub literals: Vec<i64>,
}

impl Contract {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    /// Slots that aggressive mode may overwrite: every scalar slot and
    /// every array length slot, in declaration order.
    pub fn fuzzable_slots(&self) -> Vec<u64> {
        self.decls.iter().map(|d| d.slot).collect()
    }
}
