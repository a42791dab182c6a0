//! The free bounded distributive lattice of principals.
//!
//! Principals are ordered by authority: `p ⪰ q` ("p acts for q") holds when
//! `p` carries at least the authority of `q`. Conjunction (`&`) is the least
//! combined authority, disjunction (`|`) the greatest common authority, `top`
//! acts for everything and everything acts for `bot`.
//!
//! Read as positive propositional formulas, `⪰` is implication with `top` as
//! *false* and `bot` as *true*. The canonical representation is therefore an
//! irredundant DNF: an antichain of atom sets (monomials). `top` is the empty
//! disjunction and `bot` is the disjunction holding only the empty monomial.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Spellings that may not be used as atom names.
pub const RESERVED: &[&str] = &["top", "bot"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomError {
    #[error("`{0}` is reserved and cannot name a principal")]
    Reserved(String),
    #[error("`{0}` is not a valid principal name")]
    Invalid(String),
}

/// The name of an atomic principal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomName(Arc<str>);

impl AtomName {
    pub fn new(name: &str) -> Result<Self, AtomError> {
        if RESERVED.contains(&name) {
            return Err(AtomError::Reserved(name.to_string()));
        }
        if !is_identifier(name) {
            return Err(AtomError::Invalid(name.to_string()));
        }
        Ok(AtomName(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Debug for AtomName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for AtomName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for AtomName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// A principal term as written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Principal {
    Top,
    Bottom,
    Atom(AtomName),
    Conj(Box<Principal>, Box<Principal>),
    Disj(Box<Principal>, Box<Principal>),
}

impl Principal {
    pub fn atom(name: &str) -> Result<Self, AtomError> {
        AtomName::new(name).map(Principal::Atom)
    }

    pub fn conj(self, other: Principal) -> Principal {
        Principal::Conj(Box::new(self), Box::new(other))
    }

    pub fn disj(self, other: Principal) -> Principal {
        Principal::Disj(Box::new(self), Box::new(other))
    }

    pub fn normalize(&self) -> NormalForm {
        normalize(self)
    }

    pub fn atoms(&self) -> BTreeSet<AtomName> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<AtomName>) {
        match self {
            Principal::Top | Principal::Bottom => {}
            Principal::Atom(a) => {
                out.insert(a.clone());
            }
            Principal::Conj(l, r) | Principal::Disj(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Principal::Disj(..) => 1,
            Principal::Conj(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Both operators parse left-associatively, so a right operand of the
        // same precedence needs parentheses to round-trip.
        fn operand(f: &mut fmt::Formatter<'_>, p: &Principal, min: u8) -> fmt::Result {
            if p.precedence() < min {
                write!(f, "({p})")
            } else {
                write!(f, "{p}")
            }
        }
        match self {
            Principal::Top => f.write_str("top"),
            Principal::Bottom => f.write_str("bot"),
            Principal::Atom(a) => write!(f, "{a}"),
            Principal::Conj(l, r) => {
                operand(f, l, 2)?;
                f.write_str(" & ")?;
                operand(f, r, 3)
            }
            Principal::Disj(l, r) => {
                operand(f, l, 1)?;
                f.write_str(" | ")?;
                operand(f, r, 2)
            }
        }
    }
}

/// A conjunction of atoms: the join-prime principals of the lattice.
///
/// Monomials built through the public constructor are nonempty. The empty
/// monomial only appears inside [`NormalForm`] as the representation of `bot`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeSet<AtomName>);

impl Monomial {
    pub fn new(atoms: impl IntoIterator<Item = AtomName>) -> Option<Self> {
        let atoms: BTreeSet<_> = atoms.into_iter().collect();
        if atoms.is_empty() {
            None
        } else {
            Some(Monomial(atoms))
        }
    }

    pub(crate) fn from_set(atoms: BTreeSet<AtomName>) -> Self {
        Monomial(atoms)
    }

    pub fn atoms(&self) -> &BTreeSet<AtomName> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self ⪰ other` for conjunctions: every atom of `other` occurs in `self`.
    pub fn acts_for(&self, other: &Monomial) -> bool {
        other.0.is_subset(&self.0)
    }

    fn union(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.union(&other.0).cloned().collect())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("bot");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Borrowed view of a normal form's shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape<'a> {
    Top,
    Bottom,
    Disjuncts(&'a BTreeSet<Monomial>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` has no join-prime factorization (it is a lattice bound)")]
pub struct BoundFactorization(pub NormalForm);

/// Canonical irredundant DNF of a principal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalForm {
    // Antichain under inclusion. Empty = top; `{∅}` = bot.
    terms: BTreeSet<Monomial>,
}

impl NormalForm {
    pub fn top() -> Self {
        NormalForm { terms: BTreeSet::new() }
    }

    pub fn bottom() -> Self {
        NormalForm { terms: BTreeSet::from([Monomial(BTreeSet::new())]) }
    }

    pub fn atom(name: AtomName) -> Self {
        NormalForm { terms: BTreeSet::from([Monomial(BTreeSet::from([name]))]) }
    }

    pub fn from_monomial(m: Monomial) -> Self {
        NormalForm { terms: BTreeSet::from([m]) }
    }

    /// Builds the disjunction of the given monomials, absorbing redundant ones.
    pub fn from_monomials(ms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut terms: Vec<Monomial> = ms.into_iter().collect();
        // Shorter monomials absorb their supersets, so keep them first.
        terms.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let mut kept: Vec<Monomial> = Vec::with_capacity(terms.len());
        for m in terms {
            if !kept.iter().any(|k| m.acts_for(k)) {
                kept.push(m);
            }
        }
        NormalForm { terms: kept.into_iter().collect() }
    }

    /// The disjunction of single atoms; the empty clause is `top`.
    pub fn from_clause(atoms: &BTreeSet<AtomName>) -> Self {
        NormalForm::from_monomials(atoms.iter().map(|a| Monomial(BTreeSet::from([a.clone()]))))
    }

    pub fn is_top(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_bottom(&self) -> bool {
        self.terms.len() == 1 && self.terms.iter().next().is_some_and(Monomial::is_empty)
    }

    pub fn shape(&self) -> Shape<'_> {
        if self.is_top() {
            Shape::Top
        } else if self.is_bottom() {
            Shape::Bottom
        } else {
            Shape::Disjuncts(&self.terms)
        }
    }

    /// All disjuncts, with `bot` contributing the empty monomial.
    pub(crate) fn terms(&self) -> &BTreeSet<Monomial> {
        &self.terms
    }

    pub fn is_join_prime(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn atoms(&self) -> BTreeSet<AtomName> {
        self.terms.iter().flat_map(|m| m.0.iter().cloned()).collect()
    }

    pub fn conj(&self, other: &NormalForm) -> NormalForm {
        if self.is_bottom() {
            return other.clone();
        }
        if other.is_bottom() {
            return self.clone();
        }
        NormalForm::from_monomials(self.terms.iter().flat_map(|a| other.terms.iter().map(move |b| a.union(b))))
    }

    pub fn disj(&self, other: &NormalForm) -> NormalForm {
        NormalForm::from_monomials(self.terms.iter().chain(other.terms.iter()).cloned())
    }

    /// `self ⪰ other` in the free lattice.
    pub fn acts_for(&self, other: &NormalForm) -> bool {
        self.terms.iter().all(|m1| other.terms.iter().any(|m2| m1.acts_for(m2)))
    }

    /// Truth value under an assignment where exactly `controlled` atoms are true.
    pub fn eval(&self, controlled: &BTreeSet<AtomName>) -> bool {
        self.terms.iter().any(|m| m.0.is_subset(controlled))
    }

    /// Minimal clauses of the equivalent CNF (minimal transversals of the
    /// monomials). `top` yields the single empty clause; `bot` yields none.
    pub fn clauses(&self) -> Vec<BTreeSet<AtomName>> {
        let mut clauses: Vec<BTreeSet<AtomName>> = vec![BTreeSet::new()];
        for m in &self.terms {
            let mut next = Vec::new();
            for c in &clauses {
                if c.iter().any(|a| m.0.contains(a)) {
                    next.push(c.clone());
                } else {
                    for a in &m.0 {
                        let mut c2 = c.clone();
                        c2.insert(a.clone());
                        next.push(c2);
                    }
                }
            }
            clauses = minimal_sets(next);
        }
        clauses
    }
}

fn minimal_sets(mut sets: Vec<BTreeSet<AtomName>>) -> Vec<BTreeSet<AtomName>> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<BTreeSet<AtomName>> = Vec::with_capacity(sets.len());
    for s in sets {
        if !kept.iter().any(|k| k.is_subset(&s)) {
            kept.push(s);
        }
    }
    kept
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape() {
            Shape::Top => f.write_str("top"),
            Shape::Bottom => f.write_str("bot"),
            Shape::Disjuncts(ms) => {
                let many = ms.len() > 1;
                for (i, m) in ms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    if many && m.len() > 1 {
                        write!(f, "({m})")?;
                    } else {
                        write!(f, "{m}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl Serialize for NormalForm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl From<&Principal> for NormalForm {
    fn from(p: &Principal) -> Self {
        normalize(p)
    }
}

impl From<AtomName> for NormalForm {
    fn from(a: AtomName) -> Self {
        NormalForm::atom(a)
    }
}

pub fn normalize(p: &Principal) -> NormalForm {
    match p {
        Principal::Top => NormalForm::top(),
        Principal::Bottom => NormalForm::bottom(),
        Principal::Atom(a) => NormalForm::atom(a.clone()),
        Principal::Conj(l, r) => normalize(l).conj(&normalize(r)),
        Principal::Disj(l, r) => normalize(l).disj(&normalize(r)),
    }
}

pub fn syntactic_acts_for(p: &NormalForm, q: &NormalForm) -> bool {
    p.acts_for(q)
}

pub fn conj(p: &NormalForm, q: &NormalForm) -> NormalForm {
    p.conj(q)
}

pub fn disj(p: &NormalForm, q: &NormalForm) -> NormalForm {
    p.disj(q)
}

/// The monomials whose disjunction is `p`. Bounds have no factorization.
pub fn join_prime_factors(p: &NormalForm) -> Result<Vec<Monomial>, BoundFactorization> {
    match p.shape() {
        Shape::Top | Shape::Bottom => Err(BoundFactorization(p.clone())),
        Shape::Disjuncts(ms) => Ok(ms.iter().cloned().collect()),
    }
}

/// Relative pseudocomplement `p ⇝ q` in the free lattice: the least-authority
/// `r` with `p ∧ r ⪰ q`.
///
/// For `p = ⋁ pᵢ` and `q = ⋁ qⱼ` this is `⋀ᵢ ⋁ⱼ (qⱼ ∖ pᵢ)`: a monomial `m`
/// satisfies `p ∧ m ⪰ q` exactly when every `pᵢ ∪ m` contains some `qⱼ`.
/// `universe` is the declared atom universe; the result only mentions atoms
/// of `q`, so it is used as a precondition check in debug builds.
pub fn pseudocomplement(p: &NormalForm, q: &NormalForm, universe: &BTreeSet<AtomName>) -> NormalForm {
    debug_assert!(p.atoms().is_subset(universe) && q.atoms().is_subset(universe));
    pseudocomplement_free(p, q)
}

pub(crate) fn pseudocomplement_free(p: &NormalForm, q: &NormalForm) -> NormalForm {
    let mut acc = NormalForm::bottom();
    for pi in &p.terms {
        let residues =
            NormalForm::from_monomials(q.terms.iter().map(|qj| Monomial(qj.0.difference(&pi.0).cloned().collect())));
        acc = acc.conj(&residues);
        if acc.is_top() {
            break;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> NormalForm {
        NormalForm::atom(AtomName::new(s).unwrap())
    }

    fn m(atoms: &[&str]) -> Monomial {
        Monomial::new(atoms.iter().map(|s| AtomName::new(s).unwrap())).unwrap()
    }

    #[test]
    fn reserved_and_invalid_names() {
        assert!(matches!(AtomName::new("top"), Err(AtomError::Reserved(_))));
        assert!(matches!(AtomName::new("bot"), Err(AtomError::Reserved(_))));
        assert!(matches!(AtomName::new("1x"), Err(AtomError::Invalid(_))));
        assert!(matches!(AtomName::new(""), Err(AtomError::Invalid(_))));
        assert!(AtomName::new("Alice_2").is_ok());
    }

    #[test]
    fn normalize_examples() {
        let ab_or_ac = NormalForm::from_monomials([m(&["A", "B"]), m(&["A", "C"])]);
        assert_eq!(a("A").conj(&a("B").disj(&a("C"))), ab_or_ac);
        assert_eq!(a("A").conj(&a("B")).disj(&a("A")), a("A"));
        assert_eq!(a("A").disj(&NormalForm::bottom()), NormalForm::bottom());
        assert_eq!(a("A").conj(&NormalForm::top()), NormalForm::top());
        assert_eq!(a("A").disj(&NormalForm::top()), a("A"));
        assert_eq!(a("A").conj(&NormalForm::bottom()), a("A"));
        assert_eq!(a("A").conj(&a("B")), NormalForm::from_monomial(m(&["A", "B"])));
    }

    #[test]
    fn acts_for_examples() {
        let ab = a("A").conj(&a("B"));
        assert!(ab.acts_for(&a("A")));
        assert!(a("A").acts_for(&a("A").disj(&a("B"))));
        assert!(!a("A").acts_for(&a("B")));
        assert!(NormalForm::top().acts_for(&a("A")));
        assert!(a("A").acts_for(&NormalForm::bottom()));
        assert!(!NormalForm::bottom().acts_for(&a("A")));
        assert!(!a("A").acts_for(&NormalForm::top()));
    }

    #[test]
    fn factors() {
        assert_eq!(join_prime_factors(&a("A").disj(&a("B"))).unwrap(), vec![m(&["A"]), m(&["B"])]);
        assert_eq!(join_prime_factors(&a("A").conj(&a("B"))).unwrap(), vec![m(&["A", "B"])]);
        let abc = a("A").conj(&a("B")).disj(&a("C"));
        assert_eq!(join_prime_factors(&abc).unwrap(), vec![m(&["A", "B"]), m(&["C"])]);
        assert!(join_prime_factors(&NormalForm::top()).is_err());
        assert!(join_prime_factors(&NormalForm::bottom()).is_err());
    }

    #[test]
    fn pseudocomplement_examples() {
        let u: BTreeSet<_> = ["A", "B"].iter().map(|s| AtomName::new(s).unwrap()).collect();
        assert_eq!(pseudocomplement(&a("A"), &a("A"), &u), NormalForm::bottom());
        assert_eq!(pseudocomplement(&a("A"), &a("A").conj(&a("B")), &u), a("B"));
        assert_eq!(pseudocomplement(&NormalForm::bottom(), &a("A"), &u), a("A"));
        assert_eq!(pseudocomplement(&NormalForm::top(), &a("A"), &u), NormalForm::bottom());
        assert_eq!(pseudocomplement(&a("A"), &NormalForm::top(), &u), NormalForm::top());
    }

    #[test]
    fn clauses_of_bounds_and_dnf() {
        assert_eq!(NormalForm::top().clauses(), vec![BTreeSet::new()]);
        assert!(NormalForm::bottom().clauses().is_empty());
        let ab_or_c = a("A").conj(&a("B")).disj(&a("C"));
        let cnf: Vec<Vec<String>> =
            ab_or_c.clauses().iter().map(|c| c.iter().map(|x| x.to_string()).collect()).collect();
        assert_eq!(cnf, vec![vec!["A", "C"], vec!["B", "C"]]);
    }

    #[test]
    fn display_forms() {
        assert_eq!(a("A").conj(&a("B")).to_string(), "A & B");
        assert_eq!(a("A").conj(&a("B")).disj(&a("C")).to_string(), "(A & B) | C");
        assert_eq!(NormalForm::top().to_string(), "top");
        assert_eq!(NormalForm::bottom().to_string(), "bot");
        let p = Principal::atom("A").unwrap().conj(Principal::atom("B").unwrap().conj(Principal::atom("C").unwrap()));
        assert_eq!(p.to_string(), "A & (B & C)");
    }
}
