//! Text formats for label expressions and constraint files.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{LabelExpr, LabelSystem};
use crate::delegation::DelegationContext;
use crate::label::{Label, Proj};
use crate::principal::{AtomName, NormalForm};
use crate::syntax::{content_lines, line_col, Cursor, ParseError};

/// Resolves an identifier (with its byte offset) to a label expression.
pub type Resolver<'r> = dyn FnMut(&str, usize) -> Result<LabelExpr, ParseError> + 'r;

/// `L ::= <P, P> | name | top | bot | L join L | L meet L | L & L | L | L | L->C | L->I | (L)`
///
/// `join`/`meet` bind loosest, then `|`, then `&`; projections are postfix and
/// must be written without a space before `C`/`I`.
pub fn parse_label_expr_with(c: &mut Cursor<'_>, resolve: &mut Resolver<'_>) -> Result<LabelExpr, ParseError> {
    let mut lhs = label_or(c, resolve)?;
    loop {
        if c.eat_ident("join") {
            lhs = lhs.join(label_or(c, resolve)?);
        } else if c.eat_ident("meet") {
            lhs = lhs.meet(label_or(c, resolve)?);
        } else {
            return Ok(lhs);
        }
    }
}

fn label_or(c: &mut Cursor<'_>, resolve: &mut Resolver<'_>) -> Result<LabelExpr, ParseError> {
    let mut lhs = label_and(c, resolve)?;
    while c.eat_sym("|") {
        lhs = lhs.disj(label_and(c, resolve)?);
    }
    Ok(lhs)
}

fn label_and(c: &mut Cursor<'_>, resolve: &mut Resolver<'_>) -> Result<LabelExpr, ParseError> {
    let mut lhs = label_postfix(c, resolve)?;
    while c.eat_sym("&") {
        lhs = lhs.conj(label_postfix(c, resolve)?);
    }
    Ok(lhs)
}

fn label_postfix(c: &mut Cursor<'_>, resolve: &mut Resolver<'_>) -> Result<LabelExpr, ParseError> {
    let mut e = label_primary(c, resolve)?;
    while let Some(p) = c.peek_projection() {
        c.bump();
        c.bump();
        e = e.project(if p == 'C' { Proj::C } else { Proj::I });
    }
    Ok(e)
}

fn label_primary(c: &mut Cursor<'_>, resolve: &mut Resolver<'_>) -> Result<LabelExpr, ParseError> {
    if c.eat_sym("<") {
        let conf = c.principal()?;
        c.expect_sym(",")?;
        let integ = c.principal()?;
        c.expect_sym(">")?;
        return Ok(LabelExpr::Const(Label::new(&conf, &integ)));
    }
    if c.eat_sym("(") {
        let e = parse_label_expr_with(c, resolve)?;
        c.expect_sym(")")?;
        return Ok(e);
    }
    let (name, at) = c.expect_ident().map_err(|_| c.unexpected("label"))?;
    match name.as_str() {
        "top" => Ok(LabelExpr::Const(Label::of_principal(NormalForm::top()))),
        "bot" => Ok(LabelExpr::Const(Label::bottom())),
        "join" | "meet" => Err(crate::syntax::ParseError::at(c.src(), at, format!("expected label, found `{name}`"))),
        _ => resolve(&name, at),
    }
}

/// Parses a constant label; every name is a principal.
pub fn parse_label(text: &str) -> Result<Label, ParseError> {
    let mut c = Cursor::new(text)?;
    let src = c.src();
    let mut atoms = |name: &str, at: usize| -> Result<LabelExpr, ParseError> {
        let a = AtomName::new(name).map_err(|e| ParseError::at(src, at, e.to_string()))?;
        Ok(LabelExpr::Const(Label::of_atom(&a)))
    };
    let e = parse_label_expr_with(&mut c, &mut atoms)?;
    c.expect_end()?;
    Ok(e.eval_const().expect("constant label expression"))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    None,
    Ctx(Proj),
}

pub(super) fn parse_system(text: &str) -> Result<LabelSystem, ParseError> {
    let mut sys = LabelSystem::default();
    let mut block = Block::None;
    for (base, line) in content_lines(text) {
        let fail = |e: ParseError| e.rebase(text, base);
        let mut c = Cursor::new(line).map_err(fail)?;
        let header = |c: &Cursor<'_>, kw: &str| {
            c.is_ident(kw) && matches!(c.peek_at(1), Some(t) if t.tok == crate::syntax::Tok::Sym(":"))
        };
        if header(&c, "atoms") || header(&c, "vars") {
            let (kw, _) = c.expect_ident().map_err(fail)?;
            c.expect_sym(":").map_err(fail)?;
            while !c.at_end() {
                let (name, at) = c.expect_ident().map_err(fail)?;
                if kw == "atoms" {
                    let a = c.atom_name(&name, at).map_err(fail)?;
                    sys.atoms.insert(a);
                } else {
                    if name == "top" || name == "bot" || name == "join" || name == "meet" {
                        return Err(fail(ParseError::at(line, at, format!("`{name}` cannot name a variable"))));
                    }
                    if sys.atoms.iter().any(|a| a.as_str() == name) {
                        return Err(fail(ParseError::at(line, at, format!("`{name}` is already declared as an atom"))));
                    }
                    sys.declare(Arc::<str>::from(name.as_str()));
                }
                c.eat_sym(",");
            }
            block = Block::None;
        } else if header(&c, "cctx") || header(&c, "ictx") {
            let (kw, _) = c.expect_ident().map_err(fail)?;
            c.expect_sym(":").map_err(fail)?;
            c.expect_end().map_err(fail)?;
            block = Block::Ctx(if kw == "cctx" { Proj::C } else { Proj::I });
        } else if c.is_ident("flows") || c.is_ident("unc") {
            let (kw, _) = c.expect_ident().map_err(fail)?;
            let (atoms, vars) = (&sys.atoms, &sys.vars);
            let mut resolve = |name: &str, at: usize| -> Result<LabelExpr, ParseError> {
                if let Some(v) = vars.iter().find(|v| &***v == name) {
                    return Ok(LabelExpr::Var(v.clone()));
                }
                match atoms.iter().find(|a| a.as_str() == name) {
                    Some(a) => Ok(LabelExpr::Const(Label::of_atom(a))),
                    None => Err(ParseError::at(line, at, format!("undeclared name `{name}`"))),
                }
            };
            let (line_no, _) = line_col(text, base);
            if kw == "flows" {
                let from = parse_label_expr_with(&mut c, &mut resolve).map_err(fail)?;
                c.expect_sym("->").map_err(fail)?;
                let to = parse_label_expr_with(&mut c, &mut resolve).map_err(fail)?;
                c.expect_end().map_err(fail)?;
                sys.flows(from, to, format!("line {line_no}"));
            } else {
                let e = parse_label_expr_with(&mut c, &mut resolve).map_err(fail)?;
                c.expect_end().map_err(fail)?;
                sys.unc(e, format!("line {line_no}"));
            }
            block = Block::None;
        } else if let Block::Ctx(proj) = block {
            let entries = DelegationContext::parse(line).map_err(fail)?;
            let undeclared: BTreeSet<_> = entries.atoms().difference(&sys.atoms).cloned().collect();
            if let Some(a) = undeclared.iter().next() {
                let at = line.find(a.as_str()).unwrap_or(0);
                return Err(fail(ParseError::at(line, at, format!("undeclared atom `{a}`"))));
            }
            let ctx = sys.contexts.get_mut(proj);
            for e in entries.entries() {
                ctx.push(e.clone());
            }
        } else {
            return Err(fail(c.unexpected("`atoms:`, `vars:`, `cctx:`, `ictx:`, `flows` or `unc`")));
        }
    }
    for proj in Proj::BOTH {
        sys.contexts.get_mut(proj).add_atoms(sys.atoms.iter().cloned());
    }
    Ok(sys)
}
