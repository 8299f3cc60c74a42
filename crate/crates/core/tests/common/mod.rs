//! Shared fixtures and oracles for the integration suites.
#![allow(dead_code)]

use mpst_core::semantics::session_transitions;
use mpst_core::{parse, GlobalGraph, Participant, ParticipantSet, Session, SpecFile};
use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

pub const GOLDEN: [&str; 5] = [
    "social_media",
    "buyer_seller",
    "empty",
    "locks",
    "unbounded",
];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(format!("{name}.mpst"))
}

pub fn load(name: &str) -> SpecFile {
    let text = std::fs::read_to_string(data_path(name)).expect("golden file exists");
    parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn set(names: &[&str]) -> ParticipantSet {
    names.iter().map(|n| Participant::new(n)).collect()
}

/// The golden triples that are meant to be derivable.
pub fn accepted_triples() -> Vec<(String, GlobalGraph, Session, ParticipantSet)> {
    ["social_media", "buyer_seller", "empty"]
        .iter()
        .map(|name| {
            let spec = load(name);
            (
                name.to_string(),
                spec.global("G").unwrap(),
                spec.session("M").unwrap().clone(),
                spec.ignored("I").unwrap().clone(),
            )
        })
        .collect()
}

/// Every session named in the golden files.
pub fn golden_sessions() -> Vec<(String, Session)> {
    GOLDEN
        .iter()
        .flat_map(|name| {
            load(name)
                .sessions
                .into_iter()
                .map(move |(s, m)| (format!("{name}/{s}"), m))
        })
        .collect()
}

/// Reachable states and edges, built without the library's explorer.
/// `None` if there are more than `limit` states.
pub struct Reach {
    pub states: Vec<Session>,
    /// Outgoing edges as (participants involved, target).
    pub succ: Vec<Vec<([Participant; 2], usize)>>,
}

pub fn reach(start: &Session, limit: usize) -> Option<Reach> {
    let start = start.normalize();
    let mut index: HashMap<Session, usize> = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut succ = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut out = Vec::new();
        for (l, next) in session_transitions(&states[i]) {
            let next = next.normalize();
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() == limit {
                        return None;
                    }
                    index.insert(next.clone(), states.len());
                    states.push(next);
                    states.len() - 1
                }
            };
            out.push(([l.sender.clone(), l.receiver.clone()], j));
        }
        succ.push(out);
        i += 1;
    }
    Some(Reach { states, succ })
}

/// Forward search from `from` for a transition that involves `p`.
fn some_path_involves(r: &Reach, from: usize, p: &Participant) -> bool {
    let mut seen = vec![false; r.states.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(s) = queue.pop_front() {
        for (who, t) in &r.succ[s] {
            if who.contains(p) {
                return true;
            }
            if !seen[*t] {
                seen[*t] = true;
                queue.push_back(*t);
            }
        }
    }
    false
}

/// Oracle for excluded lock-freedom: every active non-ignored participant of
/// every reachable state has a path on which it communicates.
pub fn oracle_lock_free(r: &Reach, ignored: &ParticipantSet) -> bool {
    r.states.iter().enumerate().all(|(i, st)| {
        st.participants()
            .iter()
            .filter(|p| !ignored.contains(*p))
            .all(|p| some_path_involves(r, i, p))
    })
}

/// Oracle for excluded deadlock-freedom: no reachable stuck state has an
/// active non-ignored participant.
pub fn oracle_deadlock_free(r: &Reach, ignored: &ParticipantSet) -> bool {
    r.states.iter().enumerate().all(|(i, st)| {
        !r.succ[i].is_empty() || st.participants().iter().all(|p| ignored.contains(p))
    })
}

/// All subsets of `ps`.
pub fn subsets(ps: &ParticipantSet) -> Vec<ParticipantSet> {
    let v: Vec<&Participant> = ps.iter().collect();
    (0..1usize << v.len())
        .map(|mask| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| (*p).clone())
                .collect()
        })
        .collect()
}
