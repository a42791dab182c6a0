//! Label inference: label constraints are translated into principal
//! constraints per component, left-hand sides are rewritten so each bounds a
//! single variable, and a fixed point computes the minimum-authority
//! assignment.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::delegation::Decider;
use crate::label::{Label, LabelContext, Proj};
use crate::principal::{AtomName, NormalForm};

pub use parse::{parse_label, parse_label_expr_with};

pub type VarName = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LabelExpr {
    Const(Label),
    Var(VarName),
    Project(Proj, Box<LabelExpr>),
    Join(Box<LabelExpr>, Box<LabelExpr>),
    Meet(Box<LabelExpr>, Box<LabelExpr>),
    Conj(Box<LabelExpr>, Box<LabelExpr>),
    Disj(Box<LabelExpr>, Box<LabelExpr>),
}

impl LabelExpr {
    pub fn var(name: &str) -> Self {
        LabelExpr::Var(Arc::from(name))
    }

    pub fn join(self, other: LabelExpr) -> Self {
        LabelExpr::Join(Box::new(self), Box::new(other))
    }

    pub fn meet(self, other: LabelExpr) -> Self {
        LabelExpr::Meet(Box::new(self), Box::new(other))
    }

    pub fn conj(self, other: LabelExpr) -> Self {
        LabelExpr::Conj(Box::new(self), Box::new(other))
    }

    pub fn disj(self, other: LabelExpr) -> Self {
        LabelExpr::Disj(Box::new(self), Box::new(other))
    }

    pub fn project(self, proj: Proj) -> Self {
        LabelExpr::Project(proj, Box::new(self))
    }

    /// Evaluates under an assignment of variables to labels.
    pub fn eval(&self, lookup: &dyn Fn(&VarName) -> Option<Label>) -> Result<Label, SolveError> {
        Ok(match self {
            LabelExpr::Const(l) => l.clone(),
            LabelExpr::Var(x) => lookup(x).ok_or_else(|| SolveError::UnboundVariable(x.to_string()))?,
            LabelExpr::Project(p, e) => e.eval(lookup)?.project(*p),
            LabelExpr::Join(a, b) => a.eval(lookup)?.join(&b.eval(lookup)?),
            LabelExpr::Meet(a, b) => a.eval(lookup)?.meet(&b.eval(lookup)?),
            LabelExpr::Conj(a, b) => a.eval(lookup)?.conj(&b.eval(lookup)?),
            LabelExpr::Disj(a, b) => a.eval(lookup)?.disj(&b.eval(lookup)?),
        })
    }

    /// The label of a variable-free expression.
    pub fn eval_const(&self) -> Result<Label, SolveError> {
        self.eval(&|_| None)
    }

    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            LabelExpr::Const(_) => {}
            LabelExpr::Var(x) => {
                out.insert(x.clone());
            }
            LabelExpr::Project(_, e) => e.collect_vars(out),
            LabelExpr::Join(a, b) | LabelExpr::Meet(a, b) | LabelExpr::Conj(a, b) | LabelExpr::Disj(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<AtomName> {
        match self {
            LabelExpr::Const(l) => l.atoms(),
            LabelExpr::Var(_) => BTreeSet::new(),
            LabelExpr::Project(_, e) => e.atoms(),
            LabelExpr::Join(a, b) | LabelExpr::Meet(a, b) | LabelExpr::Conj(a, b) | LabelExpr::Disj(a, b) => {
                let mut s = a.atoms();
                s.extend(b.atoms());
                s
            }
        }
    }
}

impl fmt::Display for LabelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelExpr::Const(l) => write!(f, "{l}"),
            LabelExpr::Var(x) => f.write_str(x),
            LabelExpr::Project(p, e) => match **e {
                LabelExpr::Const(_) | LabelExpr::Var(_) | LabelExpr::Project(..) => write!(f, "{e}->{p}"),
                _ => write!(f, "({e})->{p}"),
            },
            LabelExpr::Join(a, b) => write!(f, "({a} join {b})"),
            LabelExpr::Meet(a, b) => write!(f, "({a} meet {b})"),
            LabelExpr::Conj(a, b) => write!(f, "({a} & {b})"),
            LabelExpr::Disj(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LabelConstraint {
    FlowsTo(LabelExpr, LabelExpr),
    Uncompromised(LabelExpr),
}

impl fmt::Display for LabelConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelConstraint::FlowsTo(a, b) => write!(f, "{a} ⊑ {b}"),
            LabelConstraint::Uncompromised(e) => write!(f, "unc({e})"),
        }
    }
}

/// Label constraints over declared variables, with the contexts that interpret them.
#[derive(Debug, Clone, Default)]
pub struct LabelSystem {
    pub atoms: BTreeSet<AtomName>,
    /// Declaration order; the solver visits constraints in this order too.
    pub vars: Vec<VarName>,
    pub contexts: LabelContext,
    pub constraints: Vec<LabelConstraint>,
    /// Where each constraint came from, for diagnostics. Parallel to `constraints`.
    pub origins: Vec<String>,
}

impl LabelSystem {
    pub fn new(contexts: LabelContext) -> Self {
        LabelSystem { contexts, ..Default::default() }
    }

    pub fn declare(&mut self, var: impl Into<VarName>) {
        let var = var.into();
        if !self.vars.contains(&var) {
            self.vars.push(var);
        }
    }

    pub fn add(&mut self, c: LabelConstraint, origin: impl Into<String>) {
        self.constraints.push(c);
        self.origins.push(origin.into());
    }

    pub fn flows(&mut self, from: LabelExpr, to: LabelExpr, origin: impl Into<String>) {
        self.add(LabelConstraint::FlowsTo(from, to), origin);
    }

    pub fn unc(&mut self, e: LabelExpr, origin: impl Into<String>) {
        self.add(LabelConstraint::Uncompromised(e), origin);
    }

    /// Parses the constraint file format.
    pub fn parse(text: &str) -> Result<Self, crate::syntax::ParseError> {
        parse::parse_system(text)
    }

    /// Checks a candidate assignment against every label constraint directly.
    pub fn satisfied_by(&self, lookup: &dyn Fn(&VarName) -> Option<Label>) -> Result<bool, SolveError> {
        for c in &self.constraints {
            let ok = match c {
                LabelConstraint::FlowsTo(a, b) => self.contexts.flows_to(&a.eval(lookup)?, &b.eval(lookup)?),
                LabelConstraint::Uncompromised(e) => self.contexts.uncompromised(&e.eval(lookup)?),
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PrincipalExpr {
    Const(NormalForm),
    Var(VarName, Proj),
    Conj(Box<PrincipalExpr>, Box<PrincipalExpr>),
    Disj(Box<PrincipalExpr>, Box<PrincipalExpr>),
    /// `p ⇝ e`: the least `r` with `r ∧ p ⪰ e`.
    PseudoImp(NormalForm, Box<PrincipalExpr>),
    /// The minimal representative of `e` under the named component's context.
    MinRep(Proj, Box<PrincipalExpr>),
    /// The maximal (weakest) representative of `e` under the named component's context.
    MaxRep(Proj, Box<PrincipalExpr>),
}

impl PrincipalExpr {
    /// Conjunction folding constants: `bot` is the unit, `top` absorbs.
    pub fn conj(a: PrincipalExpr, b: PrincipalExpr) -> PrincipalExpr {
        use PrincipalExpr::Const;
        match (a, b) {
            (Const(x), Const(y)) => Const(x.conj(&y)),
            (Const(x), e) | (e, Const(x)) if x.is_bottom() => e,
            (Const(x), _) | (_, Const(x)) if x.is_top() => Const(x),
            (a, b) => PrincipalExpr::Conj(Box::new(a), Box::new(b)),
        }
    }

    /// Disjunction folding constants: `top` is the unit, `bot` absorbs.
    pub fn disj(a: PrincipalExpr, b: PrincipalExpr) -> PrincipalExpr {
        use PrincipalExpr::Const;
        match (a, b) {
            (Const(x), Const(y)) => Const(x.disj(&y)),
            (Const(x), e) | (e, Const(x)) if x.is_top() => e,
            (Const(x), _) | (_, Const(x)) if x.is_bottom() => Const(x),
            (a, b) => PrincipalExpr::Disj(Box::new(a), Box::new(b)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            PrincipalExpr::Disj(..) => 1,
            PrincipalExpr::Conj(..) => 2,
            PrincipalExpr::Const(p) if p.terms().len() > 1 => 1,
            PrincipalExpr::Const(p) if p.terms().iter().any(|m| m.len() > 1) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for PrincipalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut fmt::Formatter<'_>, e: &PrincipalExpr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            PrincipalExpr::Const(p) => write!(f, "{p}"),
            PrincipalExpr::Var(x, p) => write!(f, "{x}.{p}"),
            PrincipalExpr::Conj(a, b) => {
                operand(f, a, 2)?;
                f.write_str(" & ")?;
                operand(f, b, 3)
            }
            PrincipalExpr::Disj(a, b) => {
                operand(f, a, 1)?;
                f.write_str(" | ")?;
                operand(f, b, 2)
            }
            PrincipalExpr::PseudoImp(p, e) => {
                operand(f, &PrincipalExpr::Const(p.clone()), 3)?;
                write!(f, " ~> ({e})")
            }
            PrincipalExpr::MinRep(p, e) => write!(f, "min_{p}({e})"),
            PrincipalExpr::MaxRep(p, e) => write!(f, "max_{p}({e})"),
        }
    }
}

/// `lhs ⪰ rhs` under the context of `component`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrincipalConstraint {
    pub lhs: PrincipalExpr,
    pub rhs: PrincipalExpr,
    pub component: Proj,
    /// Index of the label constraint this was derived from.
    pub origin: usize,
}

impl fmt::Display for PrincipalConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} >={} {}", self.lhs, self.component, self.rhs)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintSystem {
    pub atoms: BTreeSet<AtomName>,
    pub vars: Vec<VarName>,
    pub contexts: LabelContext,
    pub constraints: Vec<PrincipalConstraint>,
    pub origins: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("unsatisfiable: {constraint} fails, {lhs} does not act for {rhs} under the {component} context")]
    Unsatisfiable { constraint: String, lhs: NormalForm, rhs: NormalForm, component: Proj, origin: usize },
    #[error("no minimal solution: {constraint} bounds a meet of several variables")]
    NoMinimalSolution { constraint: String, origin: usize },
    #[error("unbound label variable `{0}`")]
    UnboundVariable(String),
    #[error("solver did not reach a fixed point after {0} passes")]
    NoFixedPoint(usize),
}

impl SolveError {
    /// Index of the label constraint to blame, when there is one.
    pub fn origin(&self) -> Option<usize> {
        match self {
            SolveError::Unsatisfiable { origin, .. } | SolveError::NoMinimalSolution { origin, .. } => Some(*origin),
            _ => None,
        }
    }
}

/// `⌊e⌋π`: the principal expression for one component of a label expression.
pub fn extract_component(e: &LabelExpr, proj: Proj) -> PrincipalExpr {
    match e {
        LabelExpr::Const(l) => PrincipalExpr::Const(l.component(proj).clone()),
        LabelExpr::Var(x) => PrincipalExpr::Var(x.clone(), proj),
        LabelExpr::Project(p, inner) => {
            if *p == proj {
                extract_component(inner, proj)
            } else {
                PrincipalExpr::Const(NormalForm::bottom())
            }
        }
        LabelExpr::Join(a, b) => {
            let (a, b) = (extract_component(a, proj), extract_component(b, proj));
            match proj {
                Proj::C => PrincipalExpr::conj(a, b),
                Proj::I => PrincipalExpr::disj(a, b),
            }
        }
        LabelExpr::Meet(a, b) => {
            let (a, b) = (extract_component(a, proj), extract_component(b, proj));
            match proj {
                Proj::C => PrincipalExpr::disj(a, b),
                Proj::I => PrincipalExpr::conj(a, b),
            }
        }
        LabelExpr::Conj(a, b) => PrincipalExpr::conj(extract_component(a, proj), extract_component(b, proj)),
        LabelExpr::Disj(a, b) => PrincipalExpr::disj(extract_component(a, proj), extract_component(b, proj)),
    }
}

pub fn translate_constraint(c: &LabelConstraint, origin: usize) -> Vec<PrincipalConstraint> {
    match c {
        LabelConstraint::FlowsTo(a, b) => vec![
            PrincipalConstraint {
                lhs: extract_component(b, Proj::C),
                rhs: extract_component(a, Proj::C),
                component: Proj::C,
                origin,
            },
            PrincipalConstraint {
                lhs: extract_component(a, Proj::I),
                rhs: extract_component(b, Proj::I),
                component: Proj::I,
                origin,
            },
        ],
        // unc(⟨c, i⟩) holds iff some r has i ⪰I r and r ⪰C c. Every such r
        // acts for max_C(c) syntactically, so the condition is i ⪰I max_C(c).
        // The strongest representative min_C(c) would be sound but reject
        // labels whose confidentiality the context makes partly public.
        LabelConstraint::Uncompromised(e) => vec![PrincipalConstraint {
            lhs: extract_component(e, Proj::I),
            rhs: PrincipalExpr::MaxRep(Proj::C, Box::new(extract_component(e, Proj::C))),
            component: Proj::I,
            origin,
        }],
    }
}

pub fn translate(sys: &LabelSystem) -> ConstraintSystem {
    ConstraintSystem {
        atoms: sys.atoms.clone(),
        vars: sys.vars.clone(),
        contexts: sys.contexts.clone(),
        constraints: sys.constraints.iter().enumerate().flat_map(|(i, c)| translate_constraint(c, i)).collect(),
        origins: sys.origins.clone(),
    }
}

/// A disjunct of a left-hand side: a constant met with some variables.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Term {
    constant: NormalForm,
    vars: BTreeSet<(VarName, Proj)>,
}

fn lhs_terms(e: &PrincipalExpr) -> Vec<Term> {
    match e {
        PrincipalExpr::Const(p) => p
            .terms()
            .iter()
            .map(|m| Term { constant: NormalForm::from_monomial(m.clone()), vars: BTreeSet::new() })
            .collect(),
        PrincipalExpr::Var(x, p) => {
            vec![Term { constant: NormalForm::bottom(), vars: BTreeSet::from([(x.clone(), *p)]) }]
        }
        PrincipalExpr::Disj(a, b) => {
            let mut out = lhs_terms(a);
            out.extend(lhs_terms(b));
            out
        }
        PrincipalExpr::Conj(a, b) => {
            let (ta, tb) = (lhs_terms(a), lhs_terms(b));
            ta.iter()
                .flat_map(|x| {
                    tb.iter().map(move |y| Term {
                        constant: x.constant.conj(&y.constant),
                        vars: x.vars.union(&y.vars).cloned().collect(),
                    })
                })
                .collect()
        }
        PrincipalExpr::PseudoImp(..) | PrincipalExpr::MinRep(..) | PrincipalExpr::MaxRep(..) => {
            unreachable!("translation never puts ⇝ or min on a left-hand side")
        }
    }
}

/// Rewrites every constraint so its left-hand side is a constant or a single variable.
///
/// The left side is put in disjunctive form and split (`a ∨ b ⪰ e` iff both
/// disjuncts do); a disjunct `x ∧ p` becomes `x ⪰ p ⇝ e`.
pub fn simplify(sys: &ConstraintSystem) -> Result<ConstraintSystem, SolveError> {
    let mut out = Vec::new();
    for c in &sys.constraints {
        let mut terms = lhs_terms(&c.lhs);
        terms.dedup();
        // A disjunct that acts for another adds nothing.
        let kept: Vec<&Term> = terms
            .iter()
            .enumerate()
            .filter(|(i, t)| {
                !terms.iter().enumerate().any(|(j, s)| {
                    j != *i && s.vars.is_subset(&t.vars) && t.constant.acts_for(&s.constant) && (s != *t || j < *i)
                })
            })
            .map(|(_, t)| t)
            .collect();
        for t in kept {
            let lhs = match t.vars.len() {
                0 => PrincipalExpr::Const(t.constant.clone()),
                1 => {
                    let (x, p) = t.vars.iter().next().expect("one variable").clone();
                    let rhs = if t.constant.is_bottom() {
                        c.rhs.clone()
                    } else {
                        PrincipalExpr::PseudoImp(t.constant.clone(), Box::new(c.rhs.clone()))
                    };
                    out.push(PrincipalConstraint {
                        lhs: PrincipalExpr::Var(x, p),
                        rhs,
                        component: c.component,
                        origin: c.origin,
                    });
                    continue;
                }
                _ => {
                    return Err(SolveError::NoMinimalSolution { constraint: c.to_string(), origin: c.origin });
                }
            };
            out.push(PrincipalConstraint { lhs, rhs: c.rhs.clone(), component: c.component, origin: c.origin });
        }
    }
    Ok(ConstraintSystem { constraints: out, ..sys.clone() })
}

/// Minimum-authority assignment of every variable.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub labels: BTreeMap<VarName, Label>,
    #[serde(skip)]
    pub contexts: LabelContext,
}

impl Solution {
    pub fn get(&self, var: &str) -> Option<&Label> {
        self.labels.get(var)
    }

    /// The weakest equivalent label, identical for equivalent solutions.
    pub fn canonical(&self, var: &str) -> Option<Label> {
        self.get(var).map(|l| self.contexts.canonical(l))
    }

    pub fn canonical_labels(&self) -> BTreeMap<VarName, Label> {
        self.labels.iter().map(|(k, l)| (k.clone(), self.contexts.canonical(l))).collect()
    }

    pub fn lookup(&self) -> impl Fn(&VarName) -> Option<Label> + '_ {
        move |x| self.labels.get(x).cloned()
    }
}

/// Evaluates a principal expression at the current assignment.
pub struct Evaluator<'a> {
    conf: Decider<'a>,
    integ: Decider<'a>,
}

impl<'a> Evaluator<'a> {
    pub fn new(contexts: &'a LabelContext) -> Self {
        Evaluator { conf: Decider::new(&contexts.conf), integ: Decider::new(&contexts.integ) }
    }

    pub fn decider(&mut self, proj: Proj) -> &mut Decider<'a> {
        match proj {
            Proj::C => &mut self.conf,
            Proj::I => &mut self.integ,
        }
    }

    pub fn eval(
        &mut self,
        e: &PrincipalExpr,
        proj: Proj,
        values: &BTreeMap<(VarName, Proj), NormalForm>,
    ) -> Result<NormalForm, SolveError> {
        Ok(match e {
            PrincipalExpr::Const(p) => p.clone(),
            PrincipalExpr::Var(x, p) => {
                values.get(&(x.clone(), *p)).cloned().ok_or_else(|| SolveError::UnboundVariable(x.to_string()))?
            }
            PrincipalExpr::Conj(a, b) => self.eval(a, proj, values)?.conj(&self.eval(b, proj, values)?),
            PrincipalExpr::Disj(a, b) => self.eval(a, proj, values)?.disj(&self.eval(b, proj, values)?),
            PrincipalExpr::PseudoImp(p, e) => {
                let v = self.eval(e, proj, values)?;
                self.decider(proj).pseudocomplement(p, &v)
            }
            PrincipalExpr::MinRep(p, e) => {
                let v = self.eval(e, *p, values)?;
                self.decider(*p).min_rep(&v)
            }
            PrincipalExpr::MaxRep(p, e) => {
                let v = self.eval(e, *p, values)?;
                self.decider(*p).max_rep(&v)
            }
        })
    }
}

/// Upper bound on full passes; each productive pass strictly raises some
/// variable in a finite lattice, so reaching it means a bug.
const MAX_PASSES: usize = 100_000;

/// Solves a simplified system. With `trace`, records every update.
pub fn solve(sys: &ConstraintSystem) -> Result<Solution, SolveError> {
    solve_traced(sys, &mut None)
}

pub fn solve_traced(sys: &ConstraintSystem, trace: &mut Option<Vec<String>>) -> Result<Solution, SolveError> {
    let mut values: BTreeMap<(VarName, Proj), NormalForm> = BTreeMap::new();
    for x in &sys.vars {
        for p in Proj::BOTH {
            values.insert((x.clone(), p), NormalForm::bottom());
        }
    }
    let mut ev = Evaluator::new(&sys.contexts);
    let (updates, residuals): (Vec<_>, Vec<_>) =
        sys.constraints.iter().partition(|c| matches!(c.lhs, PrincipalExpr::Var(..)));

    let mut pass = 0;
    loop {
        pass += 1;
        if pass > MAX_PASSES {
            return Err(SolveError::NoFixedPoint(MAX_PASSES));
        }
        let mut changed = false;
        for c in &updates {
            let PrincipalExpr::Var(x, p) = &c.lhs else { unreachable!() };
            let v = ev.eval(&c.rhs, c.component, &values)?;
            let key = (x.clone(), *p);
            let cur = values.get(&key).cloned().ok_or_else(|| SolveError::UnboundVariable(x.to_string()))?;
            if !ev.decider(c.component).acts_for(&cur, &v) {
                let next = cur.conj(&v);
                if let Some(t) = trace.as_mut() {
                    t.push(format!("pass {pass}: {c}: {x}.{p} := {next}"));
                }
                values.insert(key, next);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    for c in &residuals {
        let PrincipalExpr::Const(lhs) = &c.lhs else { unreachable!("simplified") };
        let rhs = ev.eval(&c.rhs, c.component, &values)?;
        let ok = ev.decider(c.component).acts_for(lhs, &rhs);
        if let Some(t) = trace.as_mut() {
            t.push(format!("check {c}: {lhs} >= {rhs} is {ok}"));
        }
        if !ok {
            return Err(SolveError::Unsatisfiable {
                constraint: c.to_string(),
                lhs: lhs.clone(),
                rhs,
                component: c.component,
                origin: c.origin,
            });
        }
    }

    let labels = sys
        .vars
        .iter()
        .map(|x| {
            let c = values[&(x.clone(), Proj::C)].clone();
            let i = values[&(x.clone(), Proj::I)].clone();
            (x.clone(), Label::new(c, i))
        })
        .collect();
    Ok(Solution { labels, contexts: sys.contexts.clone() })
}

/// Translates, simplifies and solves a label system.
pub fn solve_labels(sys: &LabelSystem) -> Result<Solution, SolveError> {
    solve(&simplify(&translate(sys))?)
}
