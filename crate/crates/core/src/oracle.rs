//! Brute-force semantics used to cross-check the decision procedures.
//!
//! An attacker is a set of atoms it controls; it controls a principal when the
//! principal's formula is true under that assignment (`bot` always, `top`
//! never). An attacker is consistent with a context when every entry `p ⪰ q`
//! holds as an implication. Everything here enumerates assignments, so the
//! atom universe is capped.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::delegation::DelegationContext;
use crate::label::{Label, LabelContext};
use crate::principal::{AtomName, Monomial, NormalForm};

pub const DEFAULT_UNIVERSE_BOUND: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("atom universe has {size} atoms; enumeration is limited to {bound}")]
    UniverseTooLarge { size: usize, bound: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Attacker {
    pub controlled: BTreeSet<AtomName>,
}

impl Attacker {
    pub fn controls(&self, p: &NormalForm) -> bool {
        p.eval(&self.controlled)
    }
}

impl fmt::Display for Attacker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.controlled.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// Separate views of the confidentiality and integrity lattices. Valid when
/// the attacker controls at least as much confidentiality as integrity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AsymmetricAttacker {
    pub conf: Attacker,
    pub integ: Attacker,
}

impl AsymmetricAttacker {
    pub fn is_valid(&self) -> bool {
        self.integ.controlled.is_subset(&self.conf.controlled)
    }
}

impl fmt::Display for AsymmetricAttacker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "confidentiality {}, integrity {}", self.conf, self.integ)
    }
}

/// Bitmask encoding of principals over a fixed universe.
struct Universe {
    atoms: Vec<AtomName>,
}

impl Universe {
    fn new(atoms: BTreeSet<AtomName>, bound: usize) -> Result<Self, OracleError> {
        if atoms.len() > bound {
            return Err(OracleError::UniverseTooLarge { size: atoms.len(), bound });
        }
        Ok(Universe { atoms: atoms.into_iter().collect() })
    }

    fn size(&self) -> u32 {
        1u32 << self.atoms.len()
    }

    fn compile(&self, p: &NormalForm) -> Vec<u32> {
        p.terms()
            .iter()
            .map(|m| {
                m.atoms()
                    .iter()
                    .map(|a| 1u32 << self.atoms.binary_search(a).expect("atom in universe"))
                    .fold(0, |acc, b| acc | b)
            })
            .collect()
    }

    fn attacker(&self, s: u32) -> Attacker {
        let controlled =
            self.atoms.iter().enumerate().filter(|(i, _)| s & (1 << i) != 0).map(|(_, a)| a.clone()).collect();
        Attacker { controlled }
    }
}

fn eval(masks: &[u32], s: u32) -> bool {
    masks.iter().any(|&m| m & !s == 0)
}

/// Consistency test for every assignment of the universe, as a bit vector.
fn consistent_table(u: &Universe, ctx: &DelegationContext) -> Vec<bool> {
    let entries: Vec<(Vec<u32>, Vec<u32>)> =
        ctx.entries().iter().map(|e| (u.compile(&e.delegator), u.compile(&e.delegatee))).collect();
    (0..u.size()).map(|s| entries.iter().all(|(p, q)| !eval(p, s) || eval(q, s))).collect()
}

/// All attackers over `universe` consistent with `ctx`, in increasing bitmask order.
pub fn consistent_attackers(
    ctx: &DelegationContext,
    universe: &BTreeSet<AtomName>,
) -> Result<Vec<Attacker>, OracleError> {
    consistent_attackers_bounded(ctx, universe, DEFAULT_UNIVERSE_BOUND)
}

pub fn consistent_attackers_bounded(
    ctx: &DelegationContext,
    universe: &BTreeSet<AtomName>,
    bound: usize,
) -> Result<Vec<Attacker>, OracleError> {
    let mut all = universe.clone();
    all.extend(ctx.atoms().iter().cloned());
    let u = Universe::new(all, bound)?;
    let table = consistent_table(&u, ctx);
    Ok((0..u.size()).filter(|&s| table[s as usize]).map(|s| u.attacker(s)).collect())
}

/// A consistent attacker controlling `p` but not `q`, if one exists.
pub fn acts_for_counterexample(
    ctx: &DelegationContext,
    p: &NormalForm,
    q: &NormalForm,
) -> Result<Option<Attacker>, OracleError> {
    let mut atoms = ctx.atoms().clone();
    atoms.extend(p.atoms());
    atoms.extend(q.atoms());
    let u = Universe::new(atoms, DEFAULT_UNIVERSE_BOUND)?;
    let table = consistent_table(&u, ctx);
    let (pm, qm) = (u.compile(p), u.compile(q));
    Ok((0..u.size()).find(|&s| table[s as usize] && eval(&pm, s) && !eval(&qm, s)).map(|s| u.attacker(s)))
}

/// `ctx ⊨ p ⪰ q` by enumeration.
pub fn oracle_acts_for(ctx: &DelegationContext, p: &NormalForm, q: &NormalForm) -> Result<bool, OracleError> {
    acts_for_counterexample(ctx, p, q).map(|w| w.is_none())
}

pub fn oracle_flows_to(ctx: &LabelContext, l1: &Label, l2: &Label) -> Result<bool, OracleError> {
    Ok(oracle_acts_for(&ctx.conf, &l2.conf, &l1.conf)? && oracle_acts_for(&ctx.integ, &l1.integ, &l2.integ)?)
}

/// A valid attacker for which `l` is both secret and untrusted, if one exists.
pub fn uncompromised_counterexample(ctx: &LabelContext, l: &Label) -> Result<Option<AsymmetricAttacker>, OracleError> {
    let mut atoms = ctx.conf.atoms().clone();
    atoms.extend(ctx.integ.atoms().iter().cloned());
    atoms.extend(l.atoms());
    let u = Universe::new(atoms, DEFAULT_UNIVERSE_BOUND)?;
    let ctable = consistent_table(&u, &ctx.conf);
    let itable = consistent_table(&u, &ctx.integ);
    let (cm, im) = (u.compile(&l.conf), u.compile(&l.integ));
    // Integrity views under which the label is untrusted.
    let untrusted: Vec<bool> = (0..u.size()).map(|s| itable[s as usize] && eval(&im, s)).collect();
    for sc in 0..u.size() {
        if !ctable[sc as usize] || eval(&cm, sc) {
            continue;
        }
        // Walk every subset of `sc`, including the empty set.
        let mut si = sc;
        loop {
            if untrusted[si as usize] {
                return Ok(Some(AsymmetricAttacker { conf: u.attacker(sc), integ: u.attacker(si) }));
            }
            if si == 0 {
                break;
            }
            si = (si - 1) & sc;
        }
    }
    Ok(None)
}

/// Whether `l` is public or trusted for every valid attacker, by enumeration.
pub fn oracle_uncompromised(ctx: &LabelContext, l: &Label) -> Result<bool, OracleError> {
    uncompromised_counterexample(ctx, l).map(|w| w.is_none())
}

/// Every element of the free bounded distributive lattice over `universe`,
/// including `top` and `bot`. Practical up to four atoms (168 elements).
pub fn all_principals(universe: &BTreeSet<AtomName>) -> Result<Vec<NormalForm>, OracleError> {
    const BOUND: usize = 4;
    let u = Universe::new(universe.clone(), BOUND)?;
    let n = u.size() as usize;
    // Antichains of subsets of the universe, built by deciding each subset in turn.
    let mut out = Vec::new();
    let mut chosen: Vec<u32> = Vec::new();
    fn go(i: usize, n: usize, chosen: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(chosen.clone());
            return;
        }
        go(i + 1, n, chosen, out);
        let s = i as u32;
        if chosen.iter().all(|&c| c & s != c && c & s != s) {
            chosen.push(s);
            go(i + 1, n, chosen, out);
            chosen.pop();
        }
    }
    go(0, n, &mut chosen, &mut out);
    Ok(out
        .into_iter()
        .map(|ms| {
            let monos: Vec<Monomial> = ms.iter().map(|&s| Monomial::from_set(u.attacker(s).controlled)).collect();
            NormalForm::from_monomials(monos)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_principal;

    fn nf(s: &str) -> NormalForm {
        parse_principal(s).unwrap().normalize()
    }

    fn universe(names: &[&str]) -> BTreeSet<AtomName> {
        names.iter().map(|n| AtomName::new(n).unwrap()).collect()
    }

    fn sets(attackers: &[Attacker]) -> Vec<String> {
        attackers.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn consistent_attacker_examples() {
        let ab = universe(&["A", "B"]);
        let none = consistent_attackers(&DelegationContext::new(), &ab).unwrap();
        assert_eq!(none.len(), 4);
        let one = consistent_attackers(&DelegationContext::parse("A >= B").unwrap(), &ab).unwrap();
        assert_eq!(sets(&one), ["{}", "{B}", "{A, B}"]);
        let two = consistent_attackers(&DelegationContext::parse("A == B").unwrap(), &ab).unwrap();
        assert_eq!(sets(&two), ["{}", "{A, B}"]);
    }

    #[test]
    fn universe_bound_is_enforced() {
        let names: Vec<String> = (0..17).map(|i| format!("P{i}")).collect();
        let u: BTreeSet<AtomName> = names.iter().map(|n| AtomName::new(n).unwrap()).collect();
        assert_eq!(
            consistent_attackers(&DelegationContext::new(), &u).unwrap_err(),
            OracleError::UniverseTooLarge { size: 17, bound: 16 }
        );
    }

    #[test]
    fn acts_for_examples() {
        let eq = DelegationContext::parse("A == B").unwrap();
        assert!(oracle_acts_for(&eq, &nf("A | B"), &nf("A & B")).unwrap());
        assert!(oracle_acts_for(&DelegationContext::new(), &nf("A & C"), &nf("A & C")).unwrap());
        let w = acts_for_counterexample(&DelegationContext::parse("A >= B").unwrap(), &nf("B"), &nf("A")).unwrap();
        assert_eq!(w.unwrap().to_string(), "{B}");
        // `top` is never controlled, `bot` always.
        assert!(oracle_acts_for(&DelegationContext::new(), &nf("top"), &nf("A")).unwrap());
        assert!(!oracle_acts_for(&DelegationContext::new(), &nf("bot"), &nf("A")).unwrap());
    }

    #[test]
    fn uncompromised_examples() {
        let empty = LabelContext::default();
        let w = Label::new(nf("A & B"), nf("A | B"));
        assert!(oracle_uncompromised(&empty, &Label::of_principal(nf("A & B | C"))).unwrap());
        let ieq = LabelContext::new(DelegationContext::new(), DelegationContext::parse("A == B").unwrap());
        assert!(oracle_uncompromised(&ieq, &w).unwrap());
        let cx = uncompromised_counterexample(&empty, &w).unwrap().unwrap();
        assert!(cx.is_valid());
        assert!(!cx.conf.controls(&w.conf) && cx.integ.controls(&w.integ));
    }

    #[test]
    fn lattice_sizes() {
        // Free bounded distributive lattices on 0..=3 generators.
        let sizes: Vec<usize> = [&[][..], &["A"], &["A", "B"], &["A", "B", "C"]]
            .iter()
            .map(|names| all_principals(&universe(names)).unwrap().len())
            .collect();
        assert_eq!(sizes, [2, 3, 6, 20]);
        let all = all_principals(&universe(&["A", "B", "C"])).unwrap();
        let distinct: BTreeSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 20);
    }
}
