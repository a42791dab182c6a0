#![allow(dead_code)]

use std::collections::BTreeSet;

use deleg_core::oracle::all_principals;
use deleg_core::{AtomName, DelegationContext, DelegationEntry, NormalForm};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn universe(names: &[&str]) -> BTreeSet<AtomName> {
    names.iter().map(|n| AtomName::new(n).unwrap()).collect()
}

pub fn abc() -> BTreeSet<AtomName> {
    universe(&["A", "B", "C"])
}

/// The 20 principals over three atoms.
pub fn elements() -> Vec<NormalForm> {
    all_principals(&abc()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random contexts of up to `max_len` entries over `pool`, the universe widened to `atoms`.
pub fn sample_contexts(
    rng: &mut impl Rng,
    pool: &[NormalForm],
    atoms: &BTreeSet<AtomName>,
    count: usize,
    max_len: usize,
) -> Vec<DelegationContext> {
    (0..count)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            let mut ctx =
                DelegationContext::from_entries((0..len).map(|_| {
                    DelegationEntry::new(pool.choose(rng).unwrap().clone(), pool.choose(rng).unwrap().clone())
                }));
            ctx.add_atoms(atoms.iter().cloned());
            ctx
        })
        .collect()
}

pub mod systems;
