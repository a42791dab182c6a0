//! Random label systems and an exhaustive reference solver for them.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use deleg_core::label::{Label, LabelContext, Proj};
use deleg_core::oracle::{all_principals, oracle_acts_for, oracle_uncompromised};
use deleg_core::solver::{LabelConstraint, LabelExpr, LabelSystem, Solution, VarName};
use deleg_core::{AtomName, NormalForm};
use rand::seq::SliceRandom;
use rand::Rng;

use super::sample_contexts;

pub fn random_expr(rng: &mut impl Rng, vars: &[VarName], els: &[NormalForm], depth: usize) -> LabelExpr {
    if depth == 0 || rng.gen_bool(0.45) {
        return if rng.gen_bool(0.65) {
            LabelExpr::Var(vars.choose(rng).unwrap().clone())
        } else {
            LabelExpr::Const(Label::new(els.choose(rng).unwrap().clone(), els.choose(rng).unwrap().clone()))
        };
    }
    let a = random_expr(rng, vars, els, depth - 1);
    match rng.gen_range(0..5) {
        0 => a.project(if rng.gen_bool(0.5) { Proj::C } else { Proj::I }),
        k => {
            let b = random_expr(rng, vars, els, depth - 1);
            match k {
                1 => a.join(b),
                2 => a.meet(b),
                3 => a.conj(b),
                _ => a.disj(b),
            }
        }
    }
}

pub fn random_system(rng: &mut impl Rng, atoms: &BTreeSet<AtomName>, nvars: usize) -> LabelSystem {
    let els = all_principals(atoms).unwrap();
    let vars: Vec<VarName> = (0..nvars).map(|i| Arc::from(format!("x{i}").as_str())).collect();
    let conf = sample_contexts(rng, &els, atoms, 1, 2).pop().unwrap();
    let integ = sample_contexts(rng, &els, atoms, 1, 2).pop().unwrap();
    let mut sys = LabelSystem::new(LabelContext::new(conf, integ));
    sys.atoms = atoms.clone();
    for v in &vars {
        sys.declare(v.clone());
    }
    for k in 0..rng.gen_range(1..=5) {
        if rng.gen_bool(0.25) {
            sys.unc(random_expr(rng, &vars, &els, 2), format!("c{k}"));
        } else {
            let a = random_expr(rng, &vars, &els, 2);
            let b = random_expr(rng, &vars, &els, 1);
            sys.flows(a, b, format!("c{k}"));
        }
    }
    sys
}

/// Every element of the lattice with acts-for and uncompromised decided by enumeration.
pub struct Tables {
    pub els: Vec<NormalForm>,
    index: HashMap<NormalForm, usize>,
    conf: Vec<Vec<bool>>,
    integ: Vec<Vec<bool>>,
    unc: Vec<Vec<bool>>,
}

impl Tables {
    pub fn new(atoms: &BTreeSet<AtomName>, ctx: &LabelContext) -> Self {
        let els = all_principals(atoms).unwrap();
        let index = els.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let table = |c: &deleg_core::DelegationContext| -> Vec<Vec<bool>> {
            els.iter().map(|p| els.iter().map(|q| oracle_acts_for(c, p, q).unwrap()).collect()).collect()
        };
        let unc = els
            .iter()
            .map(|c| {
                els.iter().map(|i| oracle_uncompromised(ctx, &Label::new(c.clone(), i.clone())).unwrap()).collect()
            })
            .collect();
        Tables { conf: table(&ctx.conf), integ: table(&ctx.integ), unc, index, els }
    }

    pub fn idx(&self, p: &NormalForm) -> usize {
        self.index[p]
    }

    pub fn acts_for(&self, proj: Proj, p: &NormalForm, q: &NormalForm) -> bool {
        let t = match proj {
            Proj::C => &self.conf,
            Proj::I => &self.integ,
        };
        t[self.idx(p)][self.idx(q)]
    }

    pub fn satisfied(&self, sys: &LabelSystem, lookup: &dyn Fn(&VarName) -> Option<Label>) -> bool {
        sys.constraints.iter().all(|c| match c {
            LabelConstraint::FlowsTo(a, b) => {
                let (a, b) = (a.eval(lookup).unwrap(), b.eval(lookup).unwrap());
                self.acts_for(Proj::C, &b.conf, &a.conf) && self.acts_for(Proj::I, &a.integ, &b.integ)
            }
            LabelConstraint::Uncompromised(e) => {
                let l = e.eval(lookup).unwrap();
                self.unc[self.idx(&l.conf)][self.idx(&l.integ)]
            }
        })
    }
}

pub enum Verdict {
    /// The solver's answer satisfies the system and every satisfying assignment acts for it.
    Minimal,
    /// Both the solver and enumeration find no solution.
    AgreedUnsat,
    Mismatch(String),
}

/// Checks a solver result against every assignment of labels to the variables.
pub fn check_against_enumeration(
    sys: &LabelSystem,
    result: &Result<Solution, deleg_core::solver::SolveError>,
) -> Verdict {
    let t = Tables::new(&sys.atoms, &sys.contexts);
    let n = t.els.len();
    let labels: Vec<Label> = (0..n * n).map(|k| Label::new(t.els[k / n].clone(), t.els[k % n].clone())).collect();
    let vars = &sys.vars;
    let mut choice = vec![0usize; vars.len()];
    let mut any = false;
    let sol = result.as_ref().ok();
    if let Some(sol) = sol {
        let lookup = sol.lookup();
        if !t.satisfied(sys, &lookup) {
            return Verdict::Mismatch("solver answer violates a constraint".into());
        }
    }
    loop {
        let lookup = |x: &VarName| vars.iter().position(|v| v == x).map(|i| labels[choice[i]].clone());
        if t.satisfied(sys, &lookup) {
            any = true;
            match sol {
                None => return Verdict::Mismatch(format!("solver failed but {:?} satisfies", choice)),
                Some(sol) => {
                    for (i, v) in vars.iter().enumerate() {
                        let mine = &labels[choice[i]];
                        let theirs = sol.get(v).unwrap();
                        if !t.acts_for(Proj::C, &mine.conf, &theirs.conf)
                            || !t.acts_for(Proj::I, &mine.integ, &theirs.integ)
                        {
                            return Verdict::Mismatch(format!("{v}: {mine} satisfies but does not act for {theirs}"));
                        }
                    }
                }
            }
        }
        // Next assignment, odometer style.
        let mut k = 0;
        loop {
            if k == choice.len() {
                return if any { Verdict::Minimal } else { Verdict::AgreedUnsat };
            }
            choice[k] += 1;
            if choice[k] < labels.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}
