//! Delegation contexts and the judgments decided over them: acts-for,
//! minimal and maximal representatives, and the relative pseudocomplement
//! modulo a context.
//!
//! A context entry `p ⪰ q` is an assumption: every attacker who controls `p`
//! controls `q`. All judgments peel entries from the end of the list; any
//! order gives the same answers, fixing one keeps traces reproducible.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::principal::{pseudocomplement_free, AtomName, NormalForm};
use crate::syntax::{content_lines, Cursor, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DelegationEntry {
    /// The trusting side, left of `⪰`.
    pub delegator: NormalForm,
    /// The trusted side, right of `⪰`.
    pub delegatee: NormalForm,
}

impl DelegationEntry {
    pub fn new(delegator: impl Into<NormalForm>, delegatee: impl Into<NormalForm>) -> Self {
        DelegationEntry { delegator: delegator.into(), delegatee: delegatee.into() }
    }
}

impl fmt::Display for DelegationEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} >= {}", self.delegator, self.delegatee)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DelegationContext {
    entries: Vec<DelegationEntry>,
    atoms: BTreeSet<AtomName>,
}

impl DelegationContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = DelegationEntry>) -> Self {
        let mut ctx = Self::new();
        for e in entries {
            ctx.push(e);
        }
        ctx
    }

    pub fn push(&mut self, entry: DelegationEntry) {
        self.atoms.extend(entry.delegator.atoms());
        self.atoms.extend(entry.delegatee.atoms());
        self.entries.push(entry);
    }

    /// Adds `p ⪰ q`.
    pub fn assume(&mut self, p: impl Into<NormalForm>, q: impl Into<NormalForm>) {
        self.push(DelegationEntry::new(p, q));
    }

    /// Adds `p ⪰ q` and `q ⪰ p`.
    pub fn assume_equal(&mut self, p: impl Into<NormalForm>, q: impl Into<NormalForm>) {
        let (p, q) = (p.into(), q.into());
        self.push(DelegationEntry::new(p.clone(), q.clone()));
        self.push(DelegationEntry::new(q, p));
    }

    /// Widens the atom universe without adding assumptions.
    pub fn add_atoms(&mut self, atoms: impl IntoIterator<Item = AtomName>) {
        self.atoms.extend(atoms);
    }

    pub fn entries(&self) -> &[DelegationEntry] {
        &self.entries
    }

    pub fn atoms(&self) -> &BTreeSet<AtomName> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The union of both contexts' entries, `self` first.
    pub fn extended(&self, other: &DelegationContext) -> DelegationContext {
        let mut out = self.clone();
        for e in &other.entries {
            out.push(e.clone());
        }
        out.add_atoms(other.atoms.iter().cloned());
        out
    }

    /// Parses one entry per line, `P >= Q` or `P == Q`, with `#` comments.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut ctx = DelegationContext::new();
        for (base, line) in content_lines(text) {
            let parsed = (|| {
                let mut c = Cursor::new(line)?;
                let p = c.principal()?;
                let both = if c.eat_sym(">=") {
                    false
                } else if c.eat_sym("==") {
                    true
                } else {
                    return Err(c.unexpected("`>=` or `==`"));
                };
                let q = c.principal()?;
                c.expect_end()?;
                Ok((p, both, q))
            })();
            let (p, both, q) = parsed.map_err(|e: ParseError| e.rebase(text, base))?;
            if both {
                ctx.assume_equal(&p, &q);
            } else {
                ctx.assume(&p, &q);
            }
        }
        Ok(ctx)
    }

    pub fn acts_for(&self, p: &NormalForm, q: &NormalForm) -> bool {
        Decider::new(self).acts_for(p, q)
    }

    pub fn min_rep(&self, p: &NormalForm) -> NormalForm {
        Decider::new(self).min_rep(p)
    }

    pub fn max_rep(&self, p: &NormalForm) -> NormalForm {
        Decider::new(self).max_rep(p)
    }

    pub fn equivalent(&self, p: &NormalForm, q: &NormalForm) -> bool {
        let mut d = Decider::new(self);
        d.acts_for(p, q) && d.acts_for(q, p)
    }

    pub fn pseudocomplement(&self, p: &NormalForm, q: &NormalForm) -> NormalForm {
        Decider::new(self).pseudocomplement(p, q)
    }
}

impl fmt::Display for DelegationContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

pub fn acts_for(ctx: &DelegationContext, p: &NormalForm, q: &NormalForm) -> bool {
    ctx.acts_for(p, q)
}

pub fn min_rep(ctx: &DelegationContext, p: &NormalForm) -> NormalForm {
    ctx.min_rep(p)
}

pub fn equivalent(ctx: &DelegationContext, p: &NormalForm, q: &NormalForm) -> bool {
    ctx.equivalent(p, q)
}

/// Decision procedures over one context, sharing memo tables across queries.
///
/// Keep one `Decider` alive for many queries against the same context (the
/// solver does); the tables are keyed on how many entries remain to peel.
pub struct Decider<'a> {
    ctx: &'a DelegationContext,
    acts_memo: HashMap<(usize, NormalForm, NormalForm), bool>,
    pc_memo: HashMap<(usize, NormalForm, NormalForm), NormalForm>,
    trace: Option<Vec<String>>,
    depth: usize,
}

impl<'a> Decider<'a> {
    pub fn new(ctx: &'a DelegationContext) -> Self {
        Decider { ctx, acts_memo: HashMap::new(), pc_memo: HashMap::new(), trace: None, depth: 0 }
    }

    /// Records a line per rule application; read back with [`Decider::take_trace`].
    pub fn traced(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn context(&self) -> &'a DelegationContext {
        self.ctx
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if let Some(t) = &mut self.trace {
            t.push(format!("{}{}", "  ".repeat(self.depth), line()));
        }
    }

    /// `ctx ⊨ p ⪰ q`.
    pub fn acts_for(&mut self, p: &NormalForm, q: &NormalForm) -> bool {
        self.acts_for_in(self.ctx.entries.len(), p, q)
    }

    fn acts_for_in(&mut self, k: usize, p: &NormalForm, q: &NormalForm) -> bool {
        if p.acts_for(q) {
            self.log(|| format!("P-Axiom: {p} >= {q}"));
            return true;
        }
        if k == 0 {
            self.log(|| format!("fail: {p} >= {q}"));
            return false;
        }
        let key = (k, p.clone(), q.clone());
        if let Some(&r) = self.acts_memo.get(&key) {
            self.log(|| format!("cached: {p} >= {q} is {r}"));
            return r;
        }
        let entry = &self.ctx.entries[k - 1];
        self.log(|| format!("P-Delegation [{entry}]: {p} >= {q}"));
        self.depth += 1;
        let r = self.acts_for_in(k - 1, &p.conj(&entry.delegatee), q)
            && self.acts_for_in(k - 1, p, &q.disj(&entry.delegator));
        self.depth -= 1;
        self.acts_memo.insert(key, r);
        r
    }

    /// The least-authority principal `m` with `ctx ⊨ p ⪰ q` iff `m ⪰ q` syntactically.
    pub fn min_rep(&mut self, p: &NormalForm) -> NormalForm {
        let remaining: Vec<usize> = (0..self.ctx.entries.len()).collect();
        self.min_in(&remaining, p)
    }

    fn min_in(&mut self, remaining: &[usize], p: &NormalForm) -> NormalForm {
        // `bot` is the empty monomial here and takes the join-prime path, so
        // an entry `bot >= q` still fires. `top` has no disjuncts and stays `top`.
        let terms = p.terms();
        if terms.len() != 1 {
            self.log(|| format!("Min-Factor: {p}"));
            self.depth += 1;
            let mut acc = NormalForm::top();
            for m in terms.clone() {
                acc = acc.disj(&self.min_in(remaining, &NormalForm::from_monomial(m)));
            }
            self.depth -= 1;
            return acc;
        }
        let pick = remaining.iter().rposition(|&i| p.acts_for(&self.ctx.entries[i].delegator));
        match pick {
            Some(pos) => {
                let entry = &self.ctx.entries[remaining[pos]];
                let next = p.conj(&entry.delegatee);
                self.log(|| format!("Min-Pick [{entry}]: {p} -> {next}"));
                let mut rest = remaining.to_vec();
                rest.remove(pos);
                self.depth += 1;
                let r = self.min_in(&rest, &next);
                self.depth -= 1;
                r
            }
            None => {
                self.log(|| format!("Min-Base: {p}"));
                p.clone()
            }
        }
    }

    /// The greatest-authority principal `m` with `ctx ⊨ q ⪰ p` iff `q ⪰ m`
    /// syntactically: the order dual of [`Decider::min_rep`], working on clauses.
    pub fn max_rep(&mut self, p: &NormalForm) -> NormalForm {
        let remaining: Vec<usize> = (0..self.ctx.entries.len()).collect();
        self.max_in(&remaining, p)
    }

    fn max_in(&mut self, remaining: &[usize], p: &NormalForm) -> NormalForm {
        let clauses = p.clauses();
        if clauses.len() != 1 {
            let mut acc = NormalForm::bottom();
            for c in &clauses {
                acc = acc.conj(&self.max_in(remaining, &NormalForm::from_clause(c)));
            }
            return acc;
        }
        let pick = remaining.iter().rposition(|&i| self.ctx.entries[i].delegatee.acts_for(p));
        match pick {
            Some(pos) => {
                let next = p.disj(&self.ctx.entries[remaining[pos]].delegator);
                let mut rest = remaining.to_vec();
                rest.remove(pos);
                self.max_in(&rest, &next)
            }
            None => p.clone(),
        }
    }

    /// The least-authority `r` (up to equivalence) with `ctx ⊨ r ∧ p ⪰ q`.
    ///
    /// Splits on entries like [`Decider::acts_for`]: `r ∧ p ⪰ q` under
    /// `ctx', a ⪰ b` holds iff `r ∧ p ∧ b ⪰ q` and `r ∧ p ⪰ q ∨ a` under `ctx'`,
    /// so the answer is the conjunction of the two sub-answers.
    pub fn pseudocomplement(&mut self, p: &NormalForm, q: &NormalForm) -> NormalForm {
        self.pc_in(self.ctx.entries.len(), p, q)
    }

    fn pc_in(&mut self, k: usize, p: &NormalForm, q: &NormalForm) -> NormalForm {
        let free = pseudocomplement_free(p, q);
        if k == 0 || free.is_bottom() {
            return free;
        }
        let key = (k, p.clone(), q.clone());
        if let Some(r) = self.pc_memo.get(&key) {
            return r.clone();
        }
        let entry = &self.ctx.entries[k - 1];
        let (a, b) = (entry.delegator.clone(), entry.delegatee.clone());
        let left = self.pc_in(k - 1, &p.conj(&b), q);
        let r = if left.is_top() { left } else { left.conj(&self.pc_in(k - 1, p, &q.disj(&a))) };
        self.pc_memo.insert(key, r.clone());
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_principal;

    fn nf(s: &str) -> NormalForm {
        parse_principal(s).unwrap().normalize()
    }

    fn ctx(s: &str) -> DelegationContext {
        DelegationContext::parse(s).unwrap()
    }

    #[test]
    fn acts_for_examples() {
        assert!(DelegationContext::new().acts_for(&nf("A & B"), &nf("A")));
        assert!(ctx("A == B").acts_for(&nf("A | B"), &nf("A & B")));
        assert!(!ctx("A >= B").acts_for(&nf("B"), &nf("A")));
        assert!(ctx("A >= B").acts_for(&nf("A"), &nf("B")));
        assert!(!DelegationContext::new().acts_for(&nf("A"), &nf("B")));
        assert!(ctx("A >= B\nB >= C").acts_for(&nf("A"), &nf("C")));
    }

    #[test]
    fn min_examples() {
        assert_eq!(DelegationContext::new().min_rep(&nf("A")), nf("A"));
        assert_eq!(ctx("A == B").min_rep(&nf("A | B")), nf("A & B"));
        assert_eq!(ctx("A >= B").min_rep(&nf("A")), nf("A & B"));
        assert_eq!(ctx("A >= B").min_rep(&nf("B")), nf("B"));
        assert_eq!(ctx("A >= B").min_rep(&nf("top")), nf("top"));
        assert_eq!(ctx("A >= B").min_rep(&nf("bot")), nf("bot"));
        // An entry whose delegator is `bot` applies to every principal.
        assert_eq!(ctx("bot >= A").min_rep(&nf("bot")), nf("A"));
        assert_eq!(ctx("bot >= A").min_rep(&nf("B | C")), nf("(A & B) | (A & C)"));
    }

    #[test]
    fn max_examples() {
        assert_eq!(ctx("A >= B").max_rep(&nf("B")), nf("A | B"));
        assert_eq!(ctx("A >= B").max_rep(&nf("A")), nf("A"));
        assert_eq!(ctx("A == B").max_rep(&nf("A & B")), nf("A | B"));
        assert_eq!(ctx("A == B").max_rep(&nf("top")), nf("top"));
        assert_eq!(ctx("A == B").max_rep(&nf("bot")), nf("bot"));
    }

    #[test]
    fn equivalence() {
        assert!(ctx("A == B").equivalent(&nf("A"), &nf("B")));
        assert!(DelegationContext::new().equivalent(&nf("A"), &nf("A")));
        assert!(!ctx("A >= B").equivalent(&nf("A"), &nf("B")));
    }

    #[test]
    fn pseudocomplement_uses_context() {
        // Free lattice: A ⇝ B = B. With A ⪰ B, A alone already acts for B.
        assert_eq!(DelegationContext::new().pseudocomplement(&nf("A"), &nf("B")), nf("B"));
        assert_eq!(ctx("A >= B").pseudocomplement(&nf("A"), &nf("B")), nf("bot"));
        let r = ctx("A >= B").pseudocomplement(&nf("C"), &nf("B & C"));
        assert!(ctx("A >= B").equivalent(&r, &nf("B")));
    }

    #[test]
    fn parse_reports_line_of_bad_entry() {
        let e = DelegationContext::parse("A >= B\n# note\nA => B\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.column, 3);
        let e = DelegationContext::parse("A >= top_x & (\n").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let c = ctx("A == B  # both ways\n\nC & D >= A | B\n");
        assert_eq!(c.len(), 3);
        assert_eq!(c.to_string(), "A >= B\nB >= A\nC & D >= A | B\n");
        assert_eq!(DelegationContext::parse(&c.to_string()).unwrap(), c);
    }
}
