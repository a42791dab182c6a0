//! The solver against exhaustive search on small random systems.

mod common;

use common::systems::{check_against_enumeration, random_system, Verdict};
use common::{rng, universe};
use deleg_core::solver::{solve_labels, SolveError};

#[test]
fn random_systems_are_solved_minimally() {
    let mut r = rng(11);
    let shapes = [(universe(&["A", "B"]), 2), (universe(&["A", "B"]), 3), (universe(&["A", "B", "C"]), 1)];
    let (mut minimal, mut unsat, mut skipped) = (0, 0, 0);
    for round in 0..150 {
        let (atoms, nvars) = &shapes[round % shapes.len()];
        let sys = random_system(&mut r, atoms, *nvars);
        let result = solve_labels(&sys);
        if matches!(result, Err(SolveError::NoMinimalSolution { .. })) {
            skipped += 1;
            continue;
        }
        match check_against_enumeration(&sys, &result) {
            Verdict::Minimal => minimal += 1,
            Verdict::AgreedUnsat => unsat += 1,
            Verdict::Mismatch(why) => panic!(
                "{why}\nconstraints: {:?}\ncctx:\n{}ictx:\n{}result: {result:?}",
                sys.constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                sys.contexts.conf,
                sys.contexts.integ
            ),
        }
    }
    assert!(minimal + unsat >= 100, "only {} systems checked ({skipped} skipped)", minimal + unsat);
    assert!(minimal >= 20 && unsat >= 5, "minimal {minimal}, unsat {unsat}");
}
