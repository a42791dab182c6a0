mod common;

use deleg_core::oracle::{oracle_acts_for, oracle_flows_to};
use deleg_core::{DelegationContext, DelegationEntry, Label, LabelContext, NormalForm};
use proptest::prelude::*;

fn el() -> impl Strategy<Value = NormalForm> {
    let els = common::elements();
    (0..els.len()).prop_map(move |i| els[i].clone())
}

fn ctx() -> impl Strategy<Value = DelegationContext> {
    prop::collection::vec((el(), el()), 0..4).prop_map(|es| {
        let mut c = DelegationContext::from_entries(es.into_iter().map(|(p, q)| DelegationEntry::new(p, q)));
        c.add_atoms(common::abc());
        c
    })
}

fn label() -> impl Strategy<Value = Label> {
    (el(), el()).prop_map(|(c, i)| Label::new(c, i))
}

proptest! {
    #[test]
    fn normal_forms_are_a_distributive_lattice(p in el(), q in el(), r in el()) {
        prop_assert_eq!(p.conj(&q), q.conj(&p));
        prop_assert_eq!(p.disj(&q), q.disj(&p));
        prop_assert_eq!(p.conj(&p.disj(&q)), p.clone());
        prop_assert_eq!(p.disj(&p.conj(&q)), p.clone());
        prop_assert_eq!(p.conj(&q.disj(&r)), p.conj(&q).disj(&p.conj(&r)));
        prop_assert!(p.conj(&q).acts_for(&p));
        prop_assert!(p.acts_for(&p.disj(&q)));
        prop_assert_eq!(p.acts_for(&q), p.conj(&q) == p);
    }

    #[test]
    fn acts_for_is_a_preorder_matching_the_oracle(c in ctx(), p in el(), q in el(), r in el()) {
        prop_assert!(c.acts_for(&p, &p));
        if c.acts_for(&p, &q) && c.acts_for(&q, &r) {
            prop_assert!(c.acts_for(&p, &r));
        }
        prop_assert_eq!(c.acts_for(&p, &q), oracle_acts_for(&c, &p, &q).unwrap());
    }

    #[test]
    fn extending_a_context_only_adds_facts(c in ctx(), d in ctx(), p in el(), q in el()) {
        if c.acts_for(&p, &q) {
            prop_assert!(c.extended(&d).acts_for(&p, &q));
            prop_assert!(d.extended(&c).acts_for(&p, &q));
        }
    }

    #[test]
    fn representatives_are_equivalent(c in ctx(), p in el()) {
        let lo = c.min_rep(&p);
        let hi = c.max_rep(&p);
        prop_assert!(c.equivalent(&lo, &p));
        prop_assert!(c.equivalent(&hi, &p));
        prop_assert_eq!(c.max_rep(&hi), hi.clone());
    }

    #[test]
    fn flows_to_matches_the_oracle(cc in ctx(), ic in ctx(), a in label(), b in label()) {
        let lc = LabelContext::new(cc, ic);
        prop_assert_eq!(lc.flows_to(&a, &b), oracle_flows_to(&lc, &a, &b).unwrap());
        prop_assert!(lc.flows_to(&a, &a.join(&b)));
        prop_assert!(lc.flows_to(&a.meet(&b), &a));
    }

    #[test]
    fn canonical_labels_identify_equivalence(cc in ctx(), ic in ctx(), a in label(), b in label()) {
        let lc = LabelContext::new(cc, ic);
        let equivalent = lc.flows_to(&a, &b) && lc.flows_to(&b, &a);
        prop_assert_eq!(equivalent, lc.canonical(&a) == lc.canonical(&b));
    }
}
