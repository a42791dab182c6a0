//! Information-flow labels: pairs of a confidentiality and an integrity
//! principal, ordered by flows-to under an asymmetric delegation context.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::delegation::{Decider, DelegationContext};
use crate::principal::{AtomName, NormalForm};

/// Which half of a label a principal or context describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Proj {
    C,
    I,
}

impl Proj {
    pub const BOTH: [Proj; 2] = [Proj::C, Proj::I];
}

impl fmt::Display for Proj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Proj::C => "C",
            Proj::I => "I",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub conf: NormalForm,
    pub integ: NormalForm,
}

impl Label {
    pub fn new(conf: impl Into<NormalForm>, integ: impl Into<NormalForm>) -> Self {
        Label { conf: conf.into(), integ: integ.into() }
    }

    /// `⟨p, p⟩`, the label of data owned by `p`.
    pub fn of_principal(p: impl Into<NormalForm>) -> Self {
        let p = p.into();
        Label { conf: p.clone(), integ: p }
    }

    pub fn of_atom(a: &AtomName) -> Self {
        Label::of_principal(NormalForm::atom(a.clone()))
    }

    /// `⟨bot, bot⟩`: public and untrusted.
    pub fn bottom() -> Self {
        Label::of_principal(NormalForm::bottom())
    }

    /// `⟨bot, top⟩`: public and fully trusted, the least element of flows-to.
    pub fn public_trusted() -> Self {
        Label { conf: NormalForm::bottom(), integ: NormalForm::top() }
    }

    pub fn component(&self, proj: Proj) -> &NormalForm {
        match proj {
            Proj::C => &self.conf,
            Proj::I => &self.integ,
        }
    }

    /// Least upper bound: `⟨c₁ ∧ c₂, i₁ ∨ i₂⟩`.
    pub fn join(&self, other: &Label) -> Label {
        Label { conf: self.conf.conj(&other.conf), integ: self.integ.disj(&other.integ) }
    }

    /// Greatest lower bound: `⟨c₁ ∨ c₂, i₁ ∧ i₂⟩`.
    pub fn meet(&self, other: &Label) -> Label {
        Label { conf: self.conf.disj(&other.conf), integ: self.integ.conj(&other.integ) }
    }

    pub fn conj(&self, other: &Label) -> Label {
        Label { conf: self.conf.conj(&other.conf), integ: self.integ.conj(&other.integ) }
    }

    pub fn disj(&self, other: &Label) -> Label {
        Label { conf: self.conf.disj(&other.conf), integ: self.integ.disj(&other.integ) }
    }

    /// Keeps one component and weakens the other to `bot`.
    pub fn project(&self, proj: Proj) -> Label {
        match proj {
            Proj::C => Label { conf: self.conf.clone(), integ: NormalForm::bottom() },
            Proj::I => Label { conf: NormalForm::bottom(), integ: self.integ.clone() },
        }
    }

    pub fn atoms(&self) -> std::collections::BTreeSet<AtomName> {
        let mut out = self.conf.atoms();
        out.extend(self.integ.atoms());
        out
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.conf, self.integ)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The pair of contexts interpreting confidentiality and integrity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelContext {
    pub conf: DelegationContext,
    pub integ: DelegationContext,
}

impl LabelContext {
    pub fn new(conf: DelegationContext, integ: DelegationContext) -> Self {
        LabelContext { conf, integ }
    }

    pub fn get(&self, proj: Proj) -> &DelegationContext {
        match proj {
            Proj::C => &self.conf,
            Proj::I => &self.integ,
        }
    }

    pub fn get_mut(&mut self, proj: Proj) -> &mut DelegationContext {
        match proj {
            Proj::C => &mut self.conf,
            Proj::I => &mut self.integ,
        }
    }

    pub fn extended(&self, other: &LabelContext) -> LabelContext {
        LabelContext { conf: self.conf.extended(&other.conf), integ: self.integ.extended(&other.integ) }
    }

    /// `l1 ⊑ l2`: `l2` is at least as secret and at most as trusted as `l1`.
    pub fn flows_to(&self, l1: &Label, l2: &Label) -> bool {
        self.conf.acts_for(&l2.conf, &l1.conf) && self.integ.acts_for(&l1.integ, &l2.integ)
    }

    /// Whether `l` is public or trusted for every valid attacker. Decided as
    /// `cctx ⊨ min_ictx(i) ⪰ c`.
    pub fn uncompromised(&self, l: &Label) -> bool {
        let witness = self.integ.min_rep(&l.integ);
        self.conf.acts_for(&witness, &l.conf)
    }

    /// The weakest representative of `l`'s equivalence class under this
    /// context: greatest confidentiality below `l.conf` and greatest
    /// integrity below `l.integ`. Equivalent labels print identically.
    pub fn canonical(&self, l: &Label) -> Label {
        Label { conf: self.conf.max_rep(&l.conf), integ: self.integ.max_rep(&l.integ) }
    }
}

pub fn flows_to(ctx: &LabelContext, l1: &Label, l2: &Label) -> bool {
    ctx.flows_to(l1, l2)
}

pub fn uncompromised(ctx: &LabelContext, l: &Label) -> bool {
    ctx.uncompromised(l)
}

/// Like [`LabelContext::uncompromised`], recording the rules applied.
pub fn uncompromised_traced(ctx: &LabelContext, l: &Label) -> (bool, Vec<String>) {
    let mut di = Decider::new(&ctx.integ).traced();
    let witness = di.min_rep(&l.integ);
    let mut trace = vec![format!("min over integrity context: {} -> {witness}", l.integ)];
    trace.extend(di.take_trace());
    let mut dc = Decider::new(&ctx.conf).traced();
    let r = dc.acts_for(&witness, &l.conf);
    trace.push(format!("confidentiality check: {witness} >= {}", l.conf));
    trace.extend(dc.take_trace());
    (r, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_principal;

    fn nf(s: &str) -> NormalForm {
        parse_principal(s).unwrap().normalize()
    }

    fn l(c: &str, i: &str) -> Label {
        Label::new(nf(c), nf(i))
    }

    fn integ_eq() -> LabelContext {
        LabelContext::new(DelegationContext::new(), DelegationContext::parse("A == B").unwrap())
    }

    #[test]
    fn join_meet_formulas() {
        assert_eq!(l("A", "A").join(&l("B", "B")), l("A & B", "A | B"));
        assert_eq!(l("A", "A").meet(&l("B", "B")), l("A | B", "A & B"));
        let x = l("A & B", "C");
        assert_eq!(x.join(&x), x);
        assert_eq!(x.conj(&Label::bottom()), x);
        assert_eq!(l("A", "A").disj(&l("B", "B")), l("A | B", "A | B"));
    }

    #[test]
    fn projections() {
        let w = l("A & B", "A | B");
        assert_eq!(w.project(Proj::C), l("A & B", "bot"));
        assert_eq!(w.project(Proj::C).project(Proj::I), Label::bottom());
        assert_eq!(Label::bottom().project(Proj::I), Label::bottom());
    }

    #[test]
    fn flows() {
        let empty = LabelContext::default();
        assert!(empty.flows_to(&l("A", "A"), &l("A & B", "A | B")));
        assert!(!empty.flows_to(&l("A & B", "bot"), &l("A", "bot")));
        assert!(empty.flows_to(&Label::public_trusted(), &l("A", "B")));
    }

    #[test]
    fn uncompromised_examples() {
        let empty = LabelContext::default();
        assert!(empty.uncompromised(&l("A", "A")));
        assert!(integ_eq().uncompromised(&l("A & B", "A | B")));
        assert!(!empty.uncompromised(&l("A & B", "A | B")));
        assert!(empty.uncompromised(&l("bot", "C")));
        let (r, trace) = uncompromised_traced(&integ_eq(), &l("A & B", "A | B"));
        assert!(r);
        assert!(trace.iter().any(|t| t.contains("Min-Pick")));
    }

    #[test]
    fn canonical_is_weakest_representative() {
        let ctx = integ_eq();
        assert_eq!(ctx.canonical(&l("A & B", "A & B")), l("A & B", "A | B"));
        assert_eq!(ctx.canonical(&l("A & B", "A | B")), l("A & B", "A | B"));
        assert_eq!(l("A", "B").to_string(), "<A, B>");
    }
}
