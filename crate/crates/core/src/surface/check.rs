//! Constraint generation, checking and call-site specialization.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::parser::parse_program;
use crate::delegation::DelegationContext;
use crate::label::{Label, LabelContext, Proj};
use crate::principal::AtomName;
use crate::solver::{solve_labels, LabelConstraint, LabelExpr, LabelSystem, Solution, SolveError};
use crate::syntax::ParseError;

/// Stop specializing past this many distinct instances.
const MAX_SPECIALIZATIONS: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub accepted: bool,
    /// Generic functions in source order, then `main`.
    pub functions: Vec<FunctionReport>,
    /// Empty unless every function is accepted.
    pub specializations: Vec<SpecializationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub accepted: bool,
    pub variables: Vec<VariableReport>,
    pub checks: Vec<CheckReport>,
    pub error: Option<Diagnostic>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableReport {
    pub name: String,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Declassify,
    Endorse,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Comes after the failing statement.
    Unchecked,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub line: usize,
    pub kind: CheckKind,
    pub subject: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecializationReport {
    pub function: String,
    pub arguments: Vec<Label>,
    /// The return label the signature gives these arguments.
    pub result: Label,
    /// Call sites, across `main` and every instance, that share this instance.
    pub calls: usize,
    pub error: Option<String>,
}

impl Report {
    pub fn function(&self, name: &str) -> Option<&FunctionReport> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn specializations_of<'r>(&'r self, name: &'r str) -> impl Iterator<Item = &'r SpecializationReport> + 'r {
        self.specializations.iter().filter(move |s| s.function == name)
    }
}

impl FunctionReport {
    pub fn variable(&self, name: &str) -> Option<&Label> {
        self.variables.iter().find(|v| v.name == name).map(|v| &v.label)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for func in &self.functions {
            let status = if func.accepted { "accepted" } else { "rejected" };
            writeln!(f, "fun {}: {status}", func.name)?;
            for v in &func.variables {
                writeln!(f, "  {} : {}", v.name, v.label)?;
            }
            for c in &func.checks {
                let kind = match c.kind {
                    CheckKind::Declassify => "declassify",
                    CheckKind::Endorse => "endorse",
                    CheckKind::Output => "output",
                };
                let verdict = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "FAIL",
                    Verdict::Unchecked => "unchecked",
                };
                writeln!(f, "  line {} {kind} {}: {verdict}", c.line, c.subject)?;
            }
            if let Some(d) = &func.error {
                writeln!(f, "  error at {}:{}: {}", d.line, d.column, d.message)?;
            }
        }
        if !self.specializations.is_empty() {
            writeln!(f, "specializations:")?;
            for s in &self.specializations {
                let args: Vec<String> = s.arguments.iter().map(|l| l.to_string()).collect();
                let calls = if s.calls == 1 { "call" } else { "calls" };
                write!(f, "  {}({}) -> {}  [{} {calls}]", s.function, args.join(", "), s.result, s.calls)?;
                if let Some(e) = &s.error {
                    write!(f, "  error: {e}")?;
                }
                writeln!(f)?;
            }
        }
        writeln!(f, "program {}", if self.accepted { "accepted" } else { "rejected" })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Parses and checks a program under its own assumptions.
pub fn check_source(text: &str) -> Result<Report, CheckError> {
    Ok(check_program(&parse_program(text)?))
}

pub fn check_program(prog: &Program) -> Report {
    check_program_with(prog, &LabelContext::default())
}

/// Checks `prog` with `extra` assumptions added after the program's own.
pub fn check_program_with(prog: &Program, extra: &LabelContext) -> Report {
    let contexts = program_contexts(prog).extended(extra);
    let mut functions = Vec::new();
    let mut main_solution = None;
    for f in prog.functions.iter().chain([&prog.main]) {
        let sys = if f.name == "main" {
            FnSystem::build(prog, f, contexts.clone(), &[], Return::None)
        } else {
            generic_system(prog, f, &contexts)
        };
        let (report, solution) = sys.check(f);
        if f.name == "main" {
            main_solution = solution;
        }
        functions.push(report);
    }
    let accepted = functions.iter().all(|f| f.accepted);
    let specializations = match (accepted, main_solution) {
        (true, Some(sol)) => specialize(prog, &contexts, &sol),
        _ => Vec::new(),
    };
    let accepted = accepted && specializations.iter().all(|s| s.error.is_none());
    Report { accepted, functions, specializations }
}

/// Host atoms in both components plus the declared assumptions.
pub fn program_contexts(prog: &Program) -> LabelContext {
    let mut ctx = LabelContext::default();
    let hosts: Vec<AtomName> = prog.hosts.iter().map(|h| h.name.clone()).collect();
    for p in Proj::BOTH {
        ctx.get_mut(p).add_atoms(hosts.iter().cloned());
    }
    for a in &prog.assumes {
        let targets: &[Proj] = match a.component {
            Component::Confidentiality => &[Proj::C],
            Component::Integrity => &[Proj::I],
            Component::Both => &Proj::BOTH,
        };
        for p in targets {
            let ctx: &mut DelegationContext = ctx.get_mut(*p);
            match a.relation {
                Relation::ActsFor => ctx.assume(&a.left, &a.right),
                Relation::Equals => ctx.assume_equal(&a.left, &a.right),
            }
        }
    }
    ctx
}

const RETURN: &str = "return";

/// How `return` is interpreted while generating a function's constraints.
#[derive(Clone)]
enum Return {
    /// `main`.
    None,
    /// Generic check: the opaque constant `⟨return, return⟩`.
    Const(Label),
    /// Specialization: the return label the signature gives the arguments,
    /// with the bounds as constraints.
    Instance(Label),
}

fn substitute(e: &LabelExpr, resolve: &dyn Fn(&str) -> LabelExpr) -> LabelExpr {
    let sub = |x: &LabelExpr| Box::new(substitute(x, resolve));
    match e {
        LabelExpr::Const(_) => e.clone(),
        LabelExpr::Var(x) => resolve(x),
        LabelExpr::Project(p, x) => LabelExpr::Project(*p, sub(x)),
        LabelExpr::Join(a, b) => LabelExpr::Join(sub(a), sub(b)),
        LabelExpr::Meet(a, b) => LabelExpr::Meet(sub(a), sub(b)),
        LabelExpr::Conj(a, b) => LabelExpr::Conj(sub(a), sub(b)),
        LabelExpr::Disj(a, b) => LabelExpr::Disj(sub(a), sub(b)),
    }
}

fn host_label(prog: &Program, name: &str) -> Option<LabelExpr> {
    prog.hosts.iter().find(|h| h.name.as_str() == name).map(|h| LabelExpr::Const(Label::of_atom(&h.name)))
}

/// Generic check: every unannotated parameter is an opaque atom of its own,
/// and the bounds become assumptions.
fn generic_system(prog: &Program, f: &FunDecl, base: &LabelContext) -> FnSystem {
    let mut contexts = base.clone();
    let mut params = Vec::new();
    let mut atoms: Vec<AtomName> = Vec::new();
    for p in &f.params {
        let atom = AtomName::new(&p.name).expect("parameter names are identifiers");
        atoms.push(atom.clone());
        params.push(Label::of_atom(&atom));
    }
    let ret_atom = AtomName::new(RETURN).expect("valid atom");
    atoms.push(ret_atom.clone());
    let ret = Label::of_atom(&ret_atom);
    for p in Proj::BOTH {
        contexts.get_mut(p).add_atoms(atoms.iter().cloned());
    }
    let display = contexts.clone();
    // Annotated parameters take their declared label; names inside refer to the opaque atoms.
    let opaque = params.clone();
    for (i, p) in f.params.iter().enumerate() {
        if let Some(ann) = &p.label {
            let resolve = |n: &str| resolve_name(prog, f, &opaque, None, n);
            params[i] = substitute(&ann.expr, &resolve).eval_const().expect("constant after substitution");
        }
    }
    let resolve = |n: &str| resolve_name(prog, f, &params, Some(&LabelExpr::Const(ret.clone())), n);
    for (lower, upper) in bounds(f) {
        let lo = substitute(&lower, &resolve).eval_const().expect("constant after substitution");
        let hi = substitute(&upper, &resolve).eval_const().expect("constant after substitution");
        contexts.conf.assume(hi.conf, lo.conf);
        contexts.integ.assume(lo.integ, hi.integ);
    }
    let mut sys = FnSystem::build(prog, f, contexts, &params, Return::Const(ret));
    sys.display = display;
    sys
}

fn resolve_name(prog: &Program, f: &FunDecl, params: &[Label], ret: Option<&LabelExpr>, n: &str) -> LabelExpr {
    if let Some(h) = host_label(prog, n) {
        return h;
    }
    if let Some(i) = f.params.iter().position(|p| p.name == n) {
        return LabelExpr::Const(params[i].clone());
    }
    match ret {
        Some(r) if n == RETURN => r.clone(),
        _ => unreachable!("name `{n}` was validated"),
    }
}

/// The default bounds (each parameter flows to the result) followed by the declared ones.
fn bounds(f: &FunDecl) -> Vec<(LabelExpr, LabelExpr)> {
    let mut out: Vec<(LabelExpr, LabelExpr)> =
        f.params.iter().map(|p| (LabelExpr::var(&p.name), LabelExpr::var(RETURN))).collect();
    out.extend(f.bounds.iter().map(|b| (b.lower.expr.clone(), b.upper.expr.clone())));
    out
}

struct CallSite {
    func: String,
    args: Vec<LabelExpr>,
}

/// One function's constraints, grouped by statement so failures can be blamed.
struct FnSystem {
    base: LabelSystem,
    header: Vec<LabelConstraint>,
    /// One group per body statement, then one for `return`.
    groups: Vec<Vec<LabelConstraint>>,
    spans: Vec<Span>,
    locals: Vec<String>,
    calls: Vec<CallSite>,
    /// Context for printing labels. For generic functions it omits the
    /// bounds, which only make more labels equivalent.
    display: LabelContext,
}

impl FnSystem {
    fn build(prog: &Program, f: &FunDecl, contexts: LabelContext, params: &[Label], ret: Return) -> FnSystem {
        let mut base = LabelSystem::new(contexts);
        base.atoms = base.contexts.conf.atoms().iter().chain(base.contexts.integ.atoms()).cloned().collect();
        let display = base.contexts.clone();
        let mut sys = FnSystem {
            base,
            header: Vec::new(),
            groups: Vec::new(),
            spans: Vec::new(),
            locals: Vec::new(),
            calls: Vec::new(),
            display,
        };
        let ret_expr = match &ret {
            Return::None => None,
            Return::Const(l) | Return::Instance(l) => Some(LabelExpr::Const(l.clone())),
        };
        if let Return::Instance(_) = ret {
            let resolve = |n: &str| resolve_name(prog, f, params, ret_expr.as_ref(), n);
            for (lower, upper) in bounds(f) {
                sys.header.push(LabelConstraint::FlowsTo(substitute(&lower, &resolve), substitute(&upper, &resolve)));
            }
        }
        let mut gen = Gen { prog, f, params, out: Vec::new(), calls: 0 };
        for stmt in &f.body {
            gen.out.clear();
            gen.stmt(stmt, &mut sys.base, &mut sys.calls);
            sys.groups.push(std::mem::take(&mut gen.out));
            sys.spans.push(stmt.span);
            if let Some(x) = stmt.binds() {
                sys.locals.push(x.to_string());
            }
        }
        if let (Some(e), Some(r)) = (&f.ret, &ret_expr) {
            let le = gen.expr_label(e);
            sys.groups.push(vec![LabelConstraint::FlowsTo(le, r.clone())]);
            sys.spans.push(e.span);
        }
        sys
    }

    fn prefix(&self, k: usize) -> LabelSystem {
        let mut sys = self.base.clone();
        for c in &self.header {
            sys.add(c.clone(), "signature");
        }
        for (g, span) in self.groups.iter().zip(&self.spans).take(k) {
            for c in g {
                sys.add(c.clone(), format!("line {}", span.line));
            }
        }
        sys
    }

    fn solve(&self) -> Result<Solution, SolveError> {
        solve_labels(&self.prefix(self.groups.len()))
    }

    /// The statement group whose addition first makes the system fail, with that failure.
    fn blame(&self) -> Option<(usize, SolveError)> {
        let fails = |k: usize| solve_labels(&self.prefix(k)).err();
        if fails(0).is_some() {
            return None;
        }
        let (mut lo, mut hi) = (0, self.groups.len());
        // Invariant: prefix(lo) solves, prefix(hi) fails.
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if fails(mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        fails(hi).map(|e| (hi - 1, e))
    }

    fn check(&self, f: &FunDecl) -> (FunctionReport, Option<Solution>) {
        let (solution, failure) = match self.solve() {
            Ok(sol) => (Some(sol), None),
            Err(e) => (None, Some(e)),
        };
        let mut blamed = None;
        let error = failure.map(|e| match self.blame() {
            Some((i, err)) => {
                blamed = Some(i);
                let span = self.spans[i];
                let what = f.body.get(i).map_or_else(|| "return".to_string(), |s| s.describe());
                Diagnostic { line: span.line, column: span.column, message: format!("{what}: {err}") }
            }
            None => Diagnostic { line: f.span.line, column: f.span.column, message: e.to_string() },
        });
        let failed = error.is_some();
        let checks = f
            .body
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let (kind, subject) = match &s.kind {
                    StmtKind::Declassify { name, .. } => (CheckKind::Declassify, name.clone()),
                    StmtKind::Endorse { name, .. } => (CheckKind::Endorse, name.clone()),
                    StmtKind::Output { host, value } => {
                        let vars: Vec<&str> = value.leaves().into_iter().map(|(x, _)| x).collect();
                        (CheckKind::Output, format!("{} to {host}", vars.join(", ")))
                    }
                    _ => return None,
                };
                let verdict = match blamed {
                    _ if !failed => Verdict::Pass,
                    Some(b) if i < b => Verdict::Pass,
                    Some(b) if i == b => Verdict::Fail,
                    _ => Verdict::Unchecked,
                };
                Some(CheckReport { line: s.span.line, kind, subject, verdict })
            })
            .collect();
        let variables = match &solution {
            Some(sol) => self
                .locals
                .iter()
                .filter_map(|x| {
                    let label = self.display.canonical(sol.get(x)?);
                    Some(VariableReport { name: x.clone(), label })
                })
                .collect(),
            None => Vec::new(),
        };
        let report = FunctionReport { name: f.name.clone(), accepted: !failed, variables, checks, error };
        (report, solution)
    }
}

struct Gen<'a> {
    prog: &'a Program,
    f: &'a FunDecl,
    params: &'a [Label],
    out: Vec<LabelConstraint>,
    calls: usize,
}

impl Gen<'_> {
    fn leaf(&self, x: &str) -> LabelExpr {
        match self.f.params.iter().position(|p| p.name == x) {
            Some(i) => LabelExpr::Const(self.params[i].clone()),
            None => LabelExpr::var(x),
        }
    }

    fn expr_label(&self, e: &Expr) -> LabelExpr {
        e.leaves()
            .into_iter()
            .map(|(x, _)| self.leaf(x))
            .reduce(LabelExpr::join)
            .unwrap_or(LabelExpr::Const(Label::public_trusted()))
    }

    fn annotation(&self, ann: &LabelAnn) -> LabelExpr {
        substitute(&ann.expr, &|n| resolve_name(self.prog, self.f, self.params, None, n))
    }

    fn flows(&mut self, a: LabelExpr, b: LabelExpr) {
        self.out.push(LabelConstraint::FlowsTo(a, b));
    }

    fn equal(&mut self, a: LabelExpr, b: LabelExpr) {
        self.flows(a.clone(), b.clone());
        self.flows(b, a);
    }

    fn bind(&mut self, sys: &mut LabelSystem, x: &str, label: &Option<LabelAnn>) -> LabelExpr {
        sys.declare(x);
        let v = LabelExpr::var(x);
        if let Some(ann) = label {
            let l = self.annotation(ann);
            self.equal(l, v.clone());
        }
        v
    }

    fn stmt(&mut self, stmt: &Stmt, sys: &mut LabelSystem, calls: &mut Vec<CallSite>) {
        match &stmt.kind {
            StmtKind::Let { name, label, value } => {
                let x = self.bind(sys, name, label);
                for (y, _) in value.leaves() {
                    let l = self.leaf(y);
                    self.flows(l, x.clone());
                }
            }
            StmtKind::Input { name, label, host } => {
                let x = self.bind(sys, name, label);
                self.flows(LabelExpr::Const(Label::of_atom(host)), x);
            }
            StmtKind::Output { host, value } => {
                for (y, _) in value.leaves() {
                    let l = self.leaf(y);
                    self.flows(l, LabelExpr::Const(Label::of_atom(host)));
                }
            }
            StmtKind::Declassify { name, label, value, target, default_host } => {
                let x = self.bind(sys, name, label);
                let le = self.expr_label(value);
                let t = match (target, default_host) {
                    (Some(ann), _) => self.annotation(ann),
                    (None, Some(h)) => {
                        LabelExpr::Const(Label::of_atom(h)).project(Proj::C).conj(le.clone().project(Proj::I))
                    }
                    (None, None) => unreachable!("validated: untargeted declassify feeds an output"),
                };
                self.downgrade(le, t, x, Proj::I);
            }
            StmtKind::Endorse { name, label, value, target } => {
                let x = self.bind(sys, name, label);
                let le = self.expr_label(value);
                let t = self.annotation(target);
                self.downgrade(le, t, x, Proj::C);
            }
            StmtKind::Call { name, label, func, args } => {
                self.calls += 1;
                let k = self.calls;
                let x = self.bind(sys, name, label);
                let callee = self.prog.function(func).expect("validated call");
                let var = |n: &str| format!("{func}#{k}.{n}");
                // Parameter labels at this site: fresh variables, or the declared annotation.
                let z = LabelExpr::var(&var(RETURN));
                sys.declare(var(RETURN).as_str());
                let mut ps: Vec<LabelExpr> = Vec::new();
                for p in &callee.params {
                    if p.label.is_none() {
                        sys.declare(var(&p.name).as_str());
                    }
                    ps.push(LabelExpr::var(&var(&p.name)));
                }
                let resolve = |n: &str| -> LabelExpr {
                    if let Some(h) = host_label(self.prog, n) {
                        return h;
                    }
                    if n == RETURN {
                        return z.clone();
                    }
                    let i = callee.params.iter().position(|p| p.name == n).expect("validated");
                    ps[i].clone()
                };
                let mut actual: Vec<LabelExpr> = ps.clone();
                for (i, p) in callee.params.iter().enumerate() {
                    if let Some(ann) = &p.label {
                        actual[i] = substitute(&ann.expr, &resolve);
                    }
                }
                let resolve = |n: &str| -> LabelExpr {
                    match callee.params.iter().position(|p| p.name == n) {
                        Some(i) => actual[i].clone(),
                        None => resolve(n),
                    }
                };
                let mut arg_labels = Vec::new();
                for (a, p) in args.iter().zip(&actual) {
                    let la = self.expr_label(a);
                    arg_labels.push(la.clone());
                    self.flows(la, p.clone());
                }
                for (lower, upper) in bounds(callee) {
                    self.flows(substitute(&lower, &resolve), substitute(&upper, &resolve));
                }
                self.flows(z, x);
                calls.push(CallSite { func: func.clone(), args: arg_labels });
            }
        }
    }

    /// Shared shape of declassify (`keep = I`) and endorse (`keep = C`): the
    /// source must be uncompromised, the kept component is unchanged, and the
    /// result has exactly the target label.
    fn downgrade(&mut self, le: LabelExpr, t: LabelExpr, x: LabelExpr, keep: Proj) {
        self.out.push(LabelConstraint::Uncompromised(le.clone()));
        self.equal(le.project(keep), t.clone().project(keep));
        self.equal(t, x);
    }
}

fn specialize(prog: &Program, contexts: &LabelContext, main: &Solution) -> Vec<SpecializationReport> {
    let mut specs: Vec<SpecializationReport> = Vec::new();
    let mut index: HashMap<(String, Vec<Label>), usize> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let main_sys = FnSystem::build(prog, &prog.main, contexts.clone(), &[], Return::None);

    let mut visit =
        |sites: &[CallSite], sol: &Solution, specs: &mut Vec<SpecializationReport>, queue: &mut VecDeque<usize>| {
            for site in sites {
                let lookup = sol.lookup();
                let args: Vec<Label> = site
                    .args
                    .iter()
                    .map(|a| contexts.canonical(&a.eval(&lookup).expect("solved variables are bound")))
                    .collect();
                let key = (site.func.clone(), args);
                if let Some(&i) = index.get(&key) {
                    specs[i].calls += 1;
                    continue;
                }
                let f = prog.function(&site.func).expect("validated call");
                let result = signature_result(prog, f, &key.1, contexts);
                let error = (specs.len() >= MAX_SPECIALIZATIONS)
                    .then(|| format!("more than {MAX_SPECIALIZATIONS} specializations"));
                let stop = error.is_some();
                index.insert(key.clone(), specs.len());
                specs.push(SpecializationReport { function: key.0, arguments: key.1, result, calls: 1, error });
                if !stop {
                    queue.push_back(specs.len() - 1);
                }
            }
        };

    visit(&main_sys.calls, main, &mut specs, &mut queue);
    while let Some(i) = queue.pop_front() {
        let f = prog.function(&specs[i].function).expect("validated call");
        let params = instance_params(prog, f, &specs[i].arguments);
        let ret = Return::Instance(specs[i].result.clone());
        let sys = FnSystem::build(prog, f, contexts.clone(), &params, ret);
        match sys.solve() {
            Ok(sol) => visit(&sys.calls, &sol, &mut specs, &mut queue),
            Err(e) => specs[i].error = Some(e.to_string()),
        }
    }
    specs
}

/// Parameter labels of an instance: the argument labels, or the declared
/// annotation where there is one.
fn instance_params(prog: &Program, f: &FunDecl, args: &[Label]) -> Vec<Label> {
    f.params
        .iter()
        .map(|p| match &p.label {
            Some(ann) => substitute(&ann.expr, &|n| resolve_name(prog, f, args, None, n))
                .eval_const()
                .expect("constant after substitution"),
            None => args[f.params.iter().position(|q| q.name == p.name).expect("own param")].clone(),
        })
        .collect()
}

/// The least label the bounds require of `return` for these arguments: the
/// join of every lower bound whose upper side is `return` itself.
fn signature_result(prog: &Program, f: &FunDecl, args: &[Label], contexts: &LabelContext) -> Label {
    let params = instance_params(prog, f, args);
    let mut out = Label::public_trusted();
    for (lower, upper) in bounds(f) {
        if !matches!(&upper, LabelExpr::Var(n) if &**n == RETURN) || lower.vars().iter().any(|v| &**v == RETURN) {
            continue;
        }
        let l = substitute(&lower, &|n| resolve_name(prog, f, &params, None, n))
            .eval_const()
            .expect("constant after substitution");
        out = out.join(&l);
    }
    contexts.canonical(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(src: &str) -> Report {
        check_source(src).unwrap_or_else(|e| panic!("{e}"))
    }

    const MILLIONAIRES: &str = "
host Alice
host Bob
assume Alice = Bob for integrity
fun main() {
  val a = Alice.input();
  val b = Bob.input();
  val w = a < b;
  val ra = declassify w to Alice;
  Alice.output(ra);
  val rb = declassify w to Bob;
  Bob.output(rb);
}
";

    #[test]
    fn millionaires_accepts() {
        let r = check(MILLIONAIRES);
        assert!(r.accepted, "{r}");
        let main = r.function("main").unwrap();
        assert_eq!(main.variable("w").unwrap().to_string(), "<Alice & Bob, Alice | Bob>");
        assert!(main.checks.iter().all(|c| c.verdict == Verdict::Pass));
        assert_eq!(main.checks.len(), 4);
    }

    #[test]
    fn millionaires_without_trust_blames_first_declassify() {
        let src = MILLIONAIRES.replace("assume Alice = Bob for integrity", "");
        let r = check(&src);
        assert!(!r.accepted);
        let main = r.function("main").unwrap();
        let err = main.error.as_ref().unwrap();
        assert_eq!(err.line, 9, "{err:?}");
        assert!(err.message.starts_with("val ra = declassify"), "{}", err.message);
        let verdicts: Vec<Verdict> = main.checks.iter().map(|c| c.verdict).collect();
        assert_eq!(verdicts, [Verdict::Fail, Verdict::Unchecked, Verdict::Unchecked, Verdict::Unchecked]);
    }

    #[test]
    fn output_without_declassify_is_rejected() {
        let r = check("host A\nhost B\nfun main() { val a = A.input(); B.output(a); }");
        assert!(!r.accepted);
        assert_eq!(r.function("main").unwrap().error.as_ref().unwrap().column, 33);
    }

    #[test]
    fn default_declassify_target() {
        let r = check("host A\nhost B\nassume A = B for integrity\nfun main() { val a = A.input(); val b = B.input(); val s = a + b; val d = declassify s; A.output(d); }");
        assert!(r.accepted, "{r}");
        assert_eq!(r.function("main").unwrap().variable("d").unwrap().conf.to_string(), "A");
    }

    #[test]
    fn endorse_keeps_confidentiality() {
        let src = "host A\nhost B\nfun main() { val b = B.input(); val e = endorse b to <B, A>; A.output(e); }";
        let r = check(src);
        // b is B-secret, so it cannot reach A even after endorsement.
        assert!(!r.accepted);
        let src = "host A\nhost B\nfun main() { val b = B.input(); val p = declassify b to <bot, bot>; val e = endorse p to <bot, A>; A.output(e); }";
        let r = check(src);
        assert!(!r.accepted, "declassifying untrusted secret data is not robust");
        let src = "host A\nhost B\nfun main() { val x = 1; val e = endorse x to <bot, A>; A.output(e); }";
        let r = check(src);
        assert!(r.accepted, "{r}");
    }

    #[test]
    fn generic_function_and_specializations() {
        let src = "
host A
host B
fun avg(x, y) { val s = x + y; return s / 2; }
fun main() {
  val a = A.input();
  val b = B.input();
  val r1 = avg(a, b);
  val r2 = avg(a, b);
  val r3 = avg(b, a);
}";
        let r = check(src);
        assert!(r.accepted, "{r}");
        let avg = r.function("avg").unwrap();
        assert!(avg.variable("s").unwrap().conf.to_string().contains("x & y"));
        assert_eq!(r.specializations.len(), 2);
        assert_eq!(r.specializations[0].calls, 2);
        assert_eq!(r.specializations[0].result.conf.to_string(), "A & B");
        let main = r.function("main").unwrap();
        assert_eq!(main.variable("r1").unwrap().conf.to_string(), "A & B");
    }

    #[test]
    fn leaking_generic_function_is_rejected() {
        let r = check("host A\nfun leak(x) { A.output(x); return 0; }\nfun main() { }");
        assert!(!r.accepted);
        assert!(!r.function("leak").unwrap().accepted);
        assert!(r.function("main").unwrap().accepted);
        assert!(r.specializations.is_empty());
    }

    #[test]
    fn bounds_allow_outputs() {
        let src = "host A\nfun send(x) where x <= A { A.output(x); return x; }\nfun main() { val a = A.input(); val r = send(a); }";
        let r = check(src);
        assert!(r.accepted, "{r}");
        let src = "host A\nhost B\nfun send(x) where x <= A { A.output(x); return x; }\nfun main() { val b = B.input(); val r = send(b); }";
        let r = check(src);
        assert!(!r.accepted, "call site must satisfy the bound");
        assert_eq!(r.function("main").unwrap().error.as_ref().unwrap().line, 4);
    }

    #[test]
    fn recursion_terminates() {
        let src = "host A\nfun loop(n) { val m = n - 1; val r = loop(m); return r; }\nfun main() { val a = A.input(); val r = loop(a); }";
        let r = check(src);
        assert!(r.accepted, "{r}");
        assert_eq!(r.specializations.len(), 1);
        assert_eq!(r.specializations[0].calls, 2);
    }

    #[test]
    fn annotations_are_exact() {
        let r = check("host A\nhost B\nfun main() { val a: A = A.input(); }");
        assert_eq!(r.function("main").unwrap().variable("a").unwrap().to_string(), "<A, A>");
        let r = check("host A\nhost B\nfun main() { val a: B = A.input(); }");
        assert!(!r.accepted);
    }

    #[test]
    fn report_text() {
        let r = check(MILLIONAIRES);
        let text = r.to_string();
        assert!(text.contains("w : <Alice & Bob, Alice | Bob>"), "{text}");
        assert!(text.ends_with("program accepted\n"));
    }
}
