use std::fmt;

use serde::Serialize;

use crate::principal::{AtomName, Principal};
use crate::solver::LabelExpr;

/// A source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone)]
pub struct Program {
    pub hosts: Vec<HostDecl>,
    pub assumes: Vec<AssumeDecl>,
    /// Every function other than `main`, in source order.
    pub functions: Vec<FunDecl>,
    pub main: FunDecl,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn is_host(&self, name: &str) -> bool {
        self.hosts.iter().any(|h| h.name.as_str() == name)
    }

    /// Number of statements across all function bodies.
    pub fn statement_count(&self) -> usize {
        self.functions.iter().chain([&self.main]).map(|f| f.body.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct HostDecl {
    pub name: AtomName,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    ActsFor,
    Equals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Confidentiality,
    Integrity,
    Both,
}

#[derive(Debug, Clone)]
pub struct AssumeDecl {
    pub left: Principal,
    pub right: Principal,
    pub relation: Relation,
    pub component: Component,
    pub span: Span,
}

/// A label written in the source. Names are kept as variables until checking
/// substitutes hosts and label parameters.
#[derive(Debug, Clone)]
pub struct LabelAnn {
    pub expr: LabelExpr,
    pub names: Vec<(String, Span)>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub label: Option<LabelAnn>,
    pub span: Span,
}

/// `lower <= upper`.
#[derive(Debug, Clone)]
pub struct Bound {
    pub lower: LabelAnn,
    pub upper: LabelAnn,
}

#[derive(Debug, Clone)]
pub struct FunDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub bounds: Vec<Bound>,
    pub body: Vec<Stmt>,
    pub ret: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Var(String),
    Int(i64),
    Bool(bool),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    /// Variables read by the expression, first occurrence first, with positions.
    pub fn leaves(&self) -> Vec<(&str, Span)> {
        let mut out: Vec<(&str, Span)> = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'e>(&'e self, out: &mut Vec<(&'e str, Span)>) {
        match &self.kind {
            ExprKind::Var(x) => {
                if !out.iter().any(|(y, _)| y == x) {
                    out.push((x, self.span));
                }
            }
            ExprKind::Int(_) | ExprKind::Bool(_) => {}
            ExprKind::Unary(_, e) => e.collect(out),
            ExprKind::Binary(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
            ExprKind::Cond(c, a, b) => {
                c.collect(out);
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Let {
        name: String,
        label: Option<LabelAnn>,
        value: Expr,
    },
    Input {
        name: String,
        label: Option<LabelAnn>,
        host: AtomName,
    },
    Output {
        host: AtomName,
        value: Expr,
    },
    /// A missing target is filled in from the output that consumes the result.
    Declassify {
        name: String,
        label: Option<LabelAnn>,
        value: Expr,
        target: Option<LabelAnn>,
        default_host: Option<AtomName>,
    },
    Endorse {
        name: String,
        label: Option<LabelAnn>,
        value: Expr,
        target: LabelAnn,
    },
    Call {
        name: String,
        label: Option<LabelAnn>,
        func: String,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    /// The variable the statement binds, if any.
    pub fn binds(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Let { name, .. }
            | StmtKind::Input { name, .. }
            | StmtKind::Declassify { name, .. }
            | StmtKind::Endorse { name, .. }
            | StmtKind::Call { name, .. } => Some(name),
            StmtKind::Output { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            StmtKind::Let { name, .. } => format!("val {name}"),
            StmtKind::Input { name, host, .. } => format!("val {name} = {host}.input()"),
            StmtKind::Output { host, .. } => format!("{host}.output(...)"),
            StmtKind::Declassify { name, .. } => format!("val {name} = declassify ..."),
            StmtKind::Endorse { name, .. } => format!("val {name} = endorse ..."),
            StmtKind::Call { name, func, .. } => format!("val {name} = {func}(...)"),
        }
    }
}
