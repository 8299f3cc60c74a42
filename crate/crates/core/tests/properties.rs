//! Randomized invariants. Terms come from the crate's seeded generators, so
//! proptest only has to search over seeds and shrink them.

mod common;

use common::subsets;
use mpst_core::analysis::{
    bounded, depth, excluded_deadlock_free, excluded_lock_free, plays_global,
};
use mpst_core::frontend::{parse, print_process, print_session};
use mpst_core::inference::{infer_minimal, Budget};
use mpst_core::random::{participants, random_global, random_session, rng, Shape};
use mpst_core::semantics::session_transitions;
use mpst_core::terms::sessions_equivalent;
use mpst_core::typing::derivable;
use mpst_core::{ParticipantSet, Session};
use proptest::prelude::*;

fn session(seed: u64) -> Session {
    random_session(&mut rng(seed), &Shape::default())
}

fn small_budget() -> Budget {
    Budget {
        state_cap: 5_000,
        max_outcomes: 4,
        ..Budget::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lock_freedom_is_monotone_in_the_ignored_set(seed: u64) {
        let s = session(seed);
        let all = s.participants();
        for ignored in subsets(&all) {
            if !excluded_lock_free(&s, &ignored).unwrap().holds {
                continue;
            }
            for p in &all {
                let mut more = ignored.clone();
                more.insert(p.clone());
                prop_assert!(excluded_lock_free(&s, &more).unwrap().holds);
            }
        }
    }

    #[test]
    fn lock_freedom_implies_deadlock_freedom(seed: u64) {
        let s = session(seed);
        for ignored in subsets(&s.participants()) {
            if excluded_lock_free(&s, &ignored).unwrap().holds {
                prop_assert!(excluded_deadlock_free(&s, &ignored).unwrap().holds);
            }
        }
    }

    #[test]
    fn ignoring_everyone_is_lock_free(seed: u64) {
        let s = session(seed);
        prop_assert!(excluded_lock_free(&s, &s.participants()).unwrap().holds);
    }

    #[test]
    fn bounded_types_have_finite_depths(seed: u64) {
        let mut r = rng(seed);
        let g = random_global(&mut r, &participants(4), &Shape::default());
        if bounded(&g).holds {
            for p in plays_global(&g) {
                prop_assert!(depth(&g, &p).is_finite());
            }
        }
    }

    #[test]
    fn transitions_only_touch_their_participants(seed: u64) {
        let s = session(seed);
        for (l, next) in session_transitions(&s) {
            for p in s.participants() {
                if l.involves(&p) {
                    continue;
                }
                let before = s.process(&p).map(|n| print_process(s.env(), n));
                let after = next.process(&p).map(|n| print_process(next.env(), n));
                prop_assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn sessions_survive_print_and_parse(seed: u64) {
        let s = session(seed);
        let spec = parse(&print_session(&s, "M")).unwrap();
        prop_assert!(sessions_equivalent(&s, spec.session("M").unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minimal_inference_is_sound(seed: u64) {
        let s = session(seed);
        if let Ok(m) = infer_minimal(&s, &small_budget()) {
            prop_assert!(derivable(&m.global, &s, &m.ignored));
            // participants of the type and the ignored ones account for the session
            let mut plays: ParticipantSet = plays_global(&m.global);
            plays.extend(m.ignored.iter().cloned());
            prop_assert_eq!(plays, s.participants());
            prop_assert!(excluded_lock_free(&s, &m.ignored).unwrap().holds);
        }
    }
}
