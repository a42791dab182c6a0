//! Parser and name checks for `.ifc` programs.
//!
//! ```text
//! program  ::= item*
//! item     ::= "host" NAME ";"?
//!            | "assume" P ("=" | ">=") P ("for" ("confidentiality" | "integrity"))? ";"?
//!            | "fun" NAME "(" (param ("," param)*)? ")" ("where" bound ("," bound)*)? "{" stmt* "}"
//! param    ::= NAME (":" label)?
//! bound    ::= label "<=" label
//! stmt     ::= "val" NAME (":" label)? "=" rhs ";"
//!            | HOST "." "output" "(" expr ")" ";"
//!            | "return" expr ";"                      (last statement of a non-main function)
//! rhs      ::= HOST "." "input" "(" ")" | "declassify" expr ("to" label)?
//!            | "endorse" expr "to" label | NAME "(" args ")" | expr
//! ```

use std::collections::{BTreeSet, HashSet};

use super::ast::*;
use crate::principal::AtomName;
use crate::solver::{parse_label_expr_with, LabelExpr};
use crate::syntax::{line_col, Cursor, ParseError, Tok};

const KEYWORDS: &[&str] = &[
    "host",
    "assume",
    "for",
    "confidentiality",
    "integrity",
    "fun",
    "where",
    "val",
    "return",
    "declassify",
    "endorse",
    "to",
    "true",
    "false",
    "top",
    "bot",
    "join",
    "meet",
];

struct Parser<'a> {
    c: Cursor<'a>,
}

impl<'a> Parser<'a> {
    fn span_at(&self, offset: usize) -> Span {
        let (line, column) = line_col(self.c.src(), offset);
        Span { offset, line, column }
    }

    fn here(&self) -> Span {
        self.span_at(self.c.offset())
    }

    fn err_at(&self, span: Span, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.c.src(), span.offset, msg)
    }

    fn name(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let span = self.here();
        let (n, _) = self.c.expect_ident().map_err(|_| self.c.unexpected(what))?;
        if KEYWORDS.contains(&n.as_str()) {
            return Err(self.err_at(span, format!("keyword `{n}` cannot be used as {what}")));
        }
        Ok((n, span))
    }

    fn label(&mut self) -> Result<LabelAnn, ParseError> {
        let span = self.here();
        let mut names = Vec::new();
        let src = self.c.src();
        let mut record = |n: &str, at: usize| -> Result<LabelExpr, ParseError> {
            let (line, column) = line_col(src, at);
            names.push((n.to_string(), Span { offset: at, line, column }));
            Ok(LabelExpr::var(n))
        };
        let expr = parse_label_expr_with(&mut self.c, &mut record)?;
        Ok(LabelAnn { expr, names, span })
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut hosts = Vec::new();
        let mut assumes = Vec::new();
        let mut functions: Vec<FunDecl> = Vec::new();
        let mut main = None;
        while !self.c.at_end() {
            let span = self.here();
            if self.c.eat_ident("host") {
                let (n, nspan) = self.name("a host name")?;
                let name = self.c.atom_name(&n, nspan.offset)?;
                hosts.push(HostDecl { name, span });
                self.c.eat_sym(";");
            } else if self.c.eat_ident("assume") {
                let left = self.c.principal()?;
                let relation = if self.c.eat_sym("=") || self.c.eat_sym("==") {
                    Relation::Equals
                } else if self.c.eat_sym(">=") {
                    Relation::ActsFor
                } else {
                    return Err(self.c.unexpected("`=` or `>=`"));
                };
                let right = self.c.principal()?;
                let component = if self.c.eat_ident("for") {
                    if self.c.eat_ident("confidentiality") {
                        Component::Confidentiality
                    } else if self.c.eat_ident("integrity") {
                        Component::Integrity
                    } else {
                        return Err(self.c.unexpected("`confidentiality` or `integrity`"));
                    }
                } else {
                    Component::Both
                };
                assumes.push(AssumeDecl { left, right, relation, component, span });
                self.c.eat_sym(";");
            } else if self.c.eat_ident("fun") {
                let f = self.function(span)?;
                if f.name == "main" {
                    if main.is_some() {
                        return Err(self.err_at(f.span, "duplicate function `main`"));
                    }
                    main = Some(f);
                } else {
                    if functions.iter().any(|g| g.name == f.name) {
                        return Err(self.err_at(f.span, format!("duplicate function `{}`", f.name)));
                    }
                    functions.push(f);
                }
            } else {
                return Err(self.c.unexpected("`host`, `assume` or `fun`"));
            }
        }
        let main = main.ok_or_else(|| self.err_at(self.here(), "program has no `main` function"))?;
        Ok(Program { hosts, assumes, functions, main })
    }

    fn function(&mut self, span: Span) -> Result<FunDecl, ParseError> {
        let (name, _) = self.name("a function name")?;
        self.c.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.c.is_sym(")") {
            loop {
                let (pname, pspan) = self.name("a parameter name")?;
                let label = if self.c.eat_sym(":") { Some(self.label()?) } else { None };
                params.push(Param { name: pname, label, span: pspan });
                if !self.c.eat_sym(",") {
                    break;
                }
            }
        }
        self.c.expect_sym(")")?;
        let mut bounds = Vec::new();
        if self.c.eat_ident("where") {
            loop {
                let lower = self.label()?;
                self.c.expect_sym("<=")?;
                let upper = self.label()?;
                bounds.push(Bound { lower, upper });
                if !self.c.eat_sym(",") {
                    break;
                }
            }
        }
        self.c.expect_sym("{")?;
        let mut body = Vec::new();
        let mut ret = None;
        while !self.c.eat_sym("}") {
            if self.c.at_end() {
                return Err(self.c.unexpected("`}`"));
            }
            if ret.is_some() {
                return Err(self.c.error("`return` must be the last statement"));
            }
            if self.c.eat_ident("return") {
                ret = Some(self.expr()?);
                self.c.expect_sym(";")?;
            } else {
                body.push(self.stmt()?);
            }
        }
        Ok(FunDecl { name, params, bounds, body, ret, span })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.here();
        if self.c.eat_ident("val") {
            let (name, _) = self.name("a variable name")?;
            let label = if self.c.eat_sym(":") { Some(self.label()?) } else { None };
            self.c.expect_sym("=")?;
            let kind = self.rhs(name, label)?;
            self.c.expect_sym(";")?;
            return Ok(Stmt { kind, span });
        }
        // HOST.output(expr);
        if matches!(self.c.peek(), Some(t) if matches!(t.tok, Tok::Ident(_)))
            && matches!(self.c.peek_at(1), Some(t) if t.tok == Tok::Sym("."))
        {
            let (h, hspan) = self.c.expect_ident()?;
            let host = self.c.atom_name(&h, hspan)?;
            self.c.expect_sym(".")?;
            self.c.expect_keyword("output")?;
            self.c.expect_sym("(")?;
            let value = self.expr()?;
            self.c.expect_sym(")")?;
            self.c.expect_sym(";")?;
            return Ok(Stmt { kind: StmtKind::Output { host, value }, span });
        }
        Err(self.c.unexpected("statement"))
    }

    fn rhs(&mut self, name: String, label: Option<LabelAnn>) -> Result<StmtKind, ParseError> {
        if self.c.eat_ident("declassify") {
            let value = self.expr()?;
            let target = if self.c.eat_ident("to") { Some(self.label()?) } else { None };
            return Ok(StmtKind::Declassify { name, label, value, target, default_host: None });
        }
        if self.c.eat_ident("endorse") {
            let value = self.expr()?;
            self.c.expect_keyword("to")?;
            let target = self.label()?;
            return Ok(StmtKind::Endorse { name, label, value, target });
        }
        let two = (self.c.peek().cloned(), self.c.peek_at(1).cloned());
        if let (Some(first), Some(second)) = two {
            if let Tok::Ident(id) = &first.tok {
                if second.tok == Tok::Sym(".") {
                    self.c.bump();
                    self.c.bump();
                    let host = self.c.atom_name(id, first.start)?;
                    self.c.expect_keyword("input")?;
                    self.c.expect_sym("(")?;
                    self.c.expect_sym(")")?;
                    return Ok(StmtKind::Input { name, label, host });
                }
                if second.tok == Tok::Sym("(") && !KEYWORDS.contains(&id.as_str()) {
                    self.c.bump();
                    self.c.bump();
                    let mut args = Vec::new();
                    if !self.c.is_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.c.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.c.expect_sym(")")?;
                    return Ok(StmtKind::Call { name, label, func: id.clone(), args });
                }
            }
        }
        let value = self.expr()?;
        Ok(StmtKind::Let { name, label, value })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let cond = self.binary(0)?;
        if self.c.eat_sym("?") {
            let a = self.expr()?;
            self.c.expect_sym(":")?;
            let b = self.expr()?;
            let span = cond.span;
            return Ok(Expr { kind: ExprKind::Cond(Box::new(cond), Box::new(a), Box::new(b)), span });
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, ParseError> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[
                ("==", BinOp::Eq),
                ("!=", BinOp::Ne),
                ("<=", BinOp::Le),
                (">=", BinOp::Ge),
                ("<", BinOp::Lt),
                (">", BinOp::Gt),
            ],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.c.eat_sym(sym) {
                    let rhs = self.binary(level + 1)?;
                    let span = lhs.span;
                    lhs = Expr { kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)), span };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let span = self.here();
        if self.c.eat_sym("-") {
            return Ok(Expr { kind: ExprKind::Unary(UnOp::Neg, Box::new(self.unary()?)), span });
        }
        if self.c.eat_sym("!") {
            return Ok(Expr { kind: ExprKind::Unary(UnOp::Not, Box::new(self.unary()?)), span });
        }
        if self.c.eat_sym("(") {
            let e = self.expr()?;
            self.c.expect_sym(")")?;
            return Ok(e);
        }
        match self.c.peek().map(|t| t.tok.clone()) {
            Some(Tok::Int(n)) => {
                self.c.bump();
                Ok(Expr { kind: ExprKind::Int(n), span })
            }
            Some(Tok::Ident(id)) if id == "true" || id == "false" => {
                self.c.bump();
                Ok(Expr { kind: ExprKind::Bool(id == "true"), span })
            }
            Some(Tok::Ident(_)) => {
                let (n, _) = self.name("a variable")?;
                Ok(Expr { kind: ExprKind::Var(n), span })
            }
            _ => Err(self.c.unexpected("expression")),
        }
    }
}

/// Parses and name-checks a program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser { c: Cursor::new(text)? };
    let mut prog = p.program()?;
    validate(text, &mut prog)?;
    Ok(prog)
}

fn validate(src: &str, prog: &mut Program) -> Result<(), ParseError> {
    let err = |span: Span, msg: String| ParseError::at(src, span.offset, msg);
    let mut hosts: BTreeSet<AtomName> = BTreeSet::new();
    for h in &prog.hosts {
        if !hosts.insert(h.name.clone()) {
            return Err(err(h.span, format!("duplicate host `{}`", h.name)));
        }
    }
    for a in &prog.assumes {
        let mut atoms = a.left.atoms();
        atoms.extend(a.right.atoms());
        if let Some(x) = atoms.iter().find(|x| !hosts.contains(*x)) {
            return Err(err(a.span, format!("unknown host `{x}` in assumption")));
        }
    }
    let signatures: Vec<(String, usize)> = prog.functions.iter().map(|f| (f.name.clone(), f.params.len())).collect();
    if !prog.main.params.is_empty() {
        return Err(err(prog.main.span, "`main` takes no parameters".into()));
    }
    if prog.main.ret.is_some() {
        return Err(err(prog.main.span, "`main` does not return a value".into()));
    }
    for f in prog.functions.iter_mut().chain(std::iter::once(&mut prog.main)) {
        validate_function(src, &hosts, &signatures, f)?;
    }
    Ok(())
}

fn validate_function(
    src: &str,
    hosts: &BTreeSet<AtomName>,
    signatures: &[(String, usize)],
    f: &mut FunDecl,
) -> Result<(), ParseError> {
    let err = |span: Span, msg: String| ParseError::at(src, span.offset, msg);
    let is_host = |n: &str| hosts.iter().any(|h| h.as_str() == n);
    let mut params: Vec<&str> = Vec::new();
    for p in &f.params {
        if is_host(&p.name) {
            return Err(err(p.span, format!("parameter `{}` has the same name as a host", p.name)));
        }
        if params.contains(&p.name.as_str()) {
            return Err(err(p.span, format!("duplicate parameter `{}`", p.name)));
        }
        params.push(&p.name);
    }
    let check_label = |ann: &LabelAnn, allow_return: bool| -> Result<(), ParseError> {
        for (n, span) in &ann.names {
            let ok = is_host(n) || params.contains(&n.as_str()) || (allow_return && n == "return");
            if !ok {
                return Err(err(*span, format!("`{n}` is not a host or label parameter")));
            }
        }
        if let Some(a) = ann.expr.atoms().into_iter().find(|a| !hosts.contains(a)) {
            return Err(err(ann.span, format!("unknown host `{a}` in label")));
        }
        Ok(())
    };
    for p in &f.params {
        if let Some(l) = &p.label {
            check_label(l, false)?;
        }
    }
    for b in &f.bounds {
        check_label(&b.lower, true)?;
        check_label(&b.upper, true)?;
    }
    if f.name != "main" && f.ret.is_none() {
        return Err(err(f.span, format!("function `{}` must end with `return`", f.name)));
    }

    let mut defined: HashSet<String> = params.iter().map(|p| p.to_string()).collect();
    let use_expr = |defined: &HashSet<String>, e: &Expr| -> Result<(), ParseError> {
        for (x, span) in e.leaves() {
            if !defined.contains(x) {
                return Err(err(span, format!("`{x}` is used before it is defined")));
            }
        }
        Ok(())
    };
    let host_ok = |h: &AtomName, span: Span| -> Result<(), ParseError> {
        if hosts.contains(h) {
            Ok(())
        } else {
            Err(err(span, format!("unknown host `{h}`")))
        }
    };
    let n = f.body.len();
    for i in 0..n {
        let span = f.body[i].span;
        match &f.body[i].kind {
            StmtKind::Let { label, value, .. } => {
                use_expr(&defined, value)?;
                if let Some(l) = label {
                    check_label(l, false)?;
                }
            }
            StmtKind::Input { label, host, .. } => {
                host_ok(host, span)?;
                if let Some(l) = label {
                    check_label(l, false)?;
                }
            }
            StmtKind::Output { host, value } => {
                host_ok(host, span)?;
                use_expr(&defined, value)?;
            }
            StmtKind::Declassify { label, value, target, .. } => {
                use_expr(&defined, value)?;
                if let Some(l) = label {
                    check_label(l, false)?;
                }
                if let Some(t) = target {
                    check_label(t, false)?;
                }
            }
            StmtKind::Endorse { label, value, target, .. } => {
                use_expr(&defined, value)?;
                if let Some(l) = label {
                    check_label(l, false)?;
                }
                check_label(target, false)?;
            }
            StmtKind::Call { label, func, args, .. } => {
                for a in args {
                    use_expr(&defined, a)?;
                }
                if let Some(l) = label {
                    check_label(l, false)?;
                }
                match signatures.iter().find(|(g, _)| g == func) {
                    None if func == "main" => return Err(err(span, "`main` cannot be called".into())),
                    None => return Err(err(span, format!("unknown function `{func}`"))),
                    Some((_, arity)) if *arity != args.len() => {
                        return Err(err(span, format!("`{func}` takes {arity} arguments, {} given", args.len())))
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(x) = f.body[i].binds() {
            if is_host(x) {
                return Err(err(span, format!("variable `{x}` has the same name as a host")));
            }
            if !defined.insert(x.to_string()) {
                return Err(err(span, format!("`{x}` is already defined")));
            }
        }
        // An untargeted declassify takes its confidentiality from the output that consumes it.
        if let StmtKind::Declassify { name, target: None, .. } = &f.body[i].kind {
            let next_use = f.body[i + 1..].iter().find(|s| stmt_reads(s).iter().any(|x| x == name));
            let host = match next_use.map(|s| &s.kind) {
                Some(StmtKind::Output { host, .. }) => host.clone(),
                _ => {
                    return Err(err(
                        span,
                        format!("declassify of `{name}` needs `to <label>` unless its next use is an output"),
                    ))
                }
            };
            if let StmtKind::Declassify { default_host, .. } = &mut f.body[i].kind {
                *default_host = Some(host);
            }
        }
    }
    if let Some(r) = &f.ret {
        use_expr(&defined, r)?;
    }
    Ok(())
}

fn stmt_reads(s: &Stmt) -> Vec<String> {
    let exprs: Vec<&Expr> = match &s.kind {
        StmtKind::Let { value, .. }
        | StmtKind::Output { value, .. }
        | StmtKind::Declassify { value, .. }
        | StmtKind::Endorse { value, .. } => vec![value],
        StmtKind::Input { .. } => vec![],
        StmtKind::Call { args, .. } => args.iter().collect(),
    };
    exprs.iter().flat_map(|e| e.leaves()).map(|(x, _)| x.to_string()).collect()
}
