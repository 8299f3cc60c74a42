//! Participants, depth and boundedness of global types; excluded lock- and
//! deadlock-freedom of sessions.

use crate::semantics::{explore_with_limit, SemanticsError, StateGraph, DEFAULT_STATE_LIMIT};
use crate::terms::{GlobalGraph, Node, NodeId, Session};
use crate::{Participant, ParticipantSet};
use serde::{Serialize, Serializer};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Participants of the global type rooted at `n`.
pub fn plays_at(g: &GlobalGraph, n: NodeId) -> ParticipantSet {
    let mut out = ParticipantSet::new();
    for m in g.reachable(n) {
        if let Node::Choice { head, .. } = g.node(m) {
            out.insert(head.from.clone());
            out.insert(head.to.clone());
        }
    }
    out
}

pub fn plays_global(g: &GlobalGraph) -> ParticipantSet {
    plays_at(g, g.root())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DepthValue {
    Finite(usize),
    Infinity,
}

impl DepthValue {
    pub fn is_finite(self) -> bool {
        matches!(self, DepthValue::Finite(_))
    }
}

impl fmt::Display for DepthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthValue::Finite(n) => write!(f, "{n}"),
            DepthValue::Infinity => f.write_str("infinity"),
        }
    }
}

impl Serialize for DepthValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DepthValue::Finite(n) => s.serialize_u64(*n as u64),
            DepthValue::Infinity => s.serialize_str("infinity"),
        }
    }
}

pub fn depth(g: &GlobalGraph, p: &Participant) -> DepthValue {
    depth_at(g, g.root(), p)
}

/// Depth of `p` in the subterm at `n`.
pub fn depth_at(g: &GlobalGraph, n: NodeId, p: &Participant) -> DepthValue {
    if !plays_at(g, n).contains(p) {
        return DepthValue::Finite(0);
    }
    // longest path through the p-avoiding subgraph; End or a cycle there
    // means some path never meets p
    let mut memo: HashMap<NodeId, Option<usize>> = HashMap::new();
    let mut on_stack: BTreeSet<NodeId> = BTreeSet::new();
    fn go(
        g: &GlobalGraph,
        n: NodeId,
        p: &Participant,
        memo: &mut HashMap<NodeId, Option<usize>>,
        on_stack: &mut BTreeSet<NodeId>,
    ) -> Option<usize> {
        if let Some(&r) = memo.get(&n) {
            return r;
        }
        if !on_stack.insert(n) {
            return None;
        }
        let r = match g.node(n) {
            Node::End => None,
            Node::Choice { head, .. } if head.from == *p || head.to == *p => Some(1),
            Node::Choice { branches, .. } => {
                let mut best = Some(0);
                for &c in branches.values() {
                    best = match (best, go(g, c, p, memo, on_stack)) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        _ => None,
                    };
                    if best.is_none() {
                        break;
                    }
                }
                best.map(|d| d + 1)
            }
        };
        on_stack.remove(&n);
        memo.insert(n, r);
        r
    }
    match go(g, n, p, &mut memo, &mut on_stack) {
        Some(d) => DepthValue::Finite(d),
        None => DepthValue::Infinity,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundedVerdict {
    pub holds: bool,
    /// First node (in canonical order) and participant with infinite depth.
    pub witness: Option<(NodeId, Participant)>,
}

pub fn bounded(g: &GlobalGraph) -> BoundedVerdict {
    for n in g.reachable(g.root()) {
        for p in plays_at(g, n) {
            if !depth_at(g, n, &p).is_finite() {
                return BoundedVerdict {
                    holds: false,
                    witness: Some((n, p)),
                };
            }
        }
    }
    BoundedVerdict {
        holds: true,
        witness: None,
    }
}

/// `result[n]` tells whether the subterm at `n` is bounded.
pub fn bounded_nodes(g: &GlobalGraph) -> Vec<bool> {
    let local: Vec<bool> = (0..g.len())
        .map(|n| plays_at(g, n).iter().all(|p| depth_at(g, n, p).is_finite()))
        .collect();
    (0..g.len())
        .map(|n| g.reachable(n).into_iter().all(|m| local[m]))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    #[serde(rename = "lock-freedom")]
    LockFreedom,
    #[serde(rename = "deadlock-freedom")]
    DeadlockFreedom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LivenessWitness {
    pub state: usize,
    pub session: String,
    pub participant: Participant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LivenessVerdict {
    pub property: Property,
    pub ignored: ParticipantSet,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LivenessWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl LivenessVerdict {
    fn new(
        property: Property,
        ignored: &ParticipantSet,
        sg: &StateGraph,
        w: Option<(usize, Participant)>,
    ) -> Self {
        LivenessVerdict {
            property,
            ignored: ignored.clone(),
            holds: w.is_none(),
            witness: w.map(|(state, participant)| LivenessWitness {
                state,
                session: sg.states[state].to_string(),
                participant,
            }),
            note: None,
        }
    }
}

/// States from which some path contains a label involving `p`.
pub fn can_involve(sg: &StateGraph, p: &Participant) -> Vec<bool> {
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); sg.len()];
    let mut good = vec![false; sg.len()];
    let mut stack = Vec::new();
    for (a, l, b) in &sg.edges {
        pred[*b].push(*a);
        if l.involves(p) && !good[*a] {
            good[*a] = true;
            stack.push(*a);
        }
    }
    while let Some(s) = stack.pop() {
        for &a in &pred[s] {
            if !good[a] {
                good[a] = true;
                stack.push(a);
            }
        }
    }
    good
}

fn all_participants(sg: &StateGraph) -> ParticipantSet {
    sg.states.iter().flat_map(|s| s.participants()).collect()
}

pub fn excluded_lock_free(
    s: &Session,
    ignored: &ParticipantSet,
) -> Result<LivenessVerdict, SemanticsError> {
    let sg = explore_with_limit(s, DEFAULT_STATE_LIMIT)?;
    Ok(lock_free_on(&sg, ignored))
}

pub fn excluded_deadlock_free(
    s: &Session,
    ignored: &ParticipantSet,
) -> Result<LivenessVerdict, SemanticsError> {
    let sg = explore_with_limit(s, DEFAULT_STATE_LIMIT)?;
    Ok(deadlock_free_on(&sg, ignored))
}

/// Follows first out-edges from `state` until a stuck or revisited state.
/// From a state where `p` is locked, every successor keeps `p` locked, so
/// this reports where the run settles rather than where the lock begins.
fn settle(sg: &StateGraph, mut state: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    while seen.insert(state) {
        match sg.out_edges(state).next() {
            Some((_, _, b)) => state = *b,
            None => break,
        }
    }
    state
}

/// Excluded lock-freedom over an explored state graph.
pub fn lock_free_on(sg: &StateGraph, ignored: &ParticipantSet) -> LivenessVerdict {
    let good: Vec<(Participant, Vec<bool>)> = all_participants(sg)
        .into_iter()
        .filter(|p| !ignored.contains(p))
        .map(|p| {
            let g = can_involve(sg, &p);
            (p, g)
        })
        .collect();
    let mut witness = None;
    'states: for (i, st) in sg.states.iter().enumerate() {
        let active = st.participants();
        for (p, g) in &good {
            if active.contains(p) && !g[i] {
                witness = Some((settle(sg, i), p.clone()));
                break 'states;
            }
        }
    }
    let mut v = LivenessVerdict::new(Property::LockFreedom, ignored, sg, witness);
    if v.holds {
        v.note = postponement_note(sg, ignored);
    }
    v
}

/// Participants that are locked in some reachable state: the least set `P`
/// for which the session is `P`-excluded lock-free.
pub fn locked_participants(sg: &StateGraph) -> ParticipantSet {
    all_participants(sg)
        .into_iter()
        .filter(|p| {
            let good = can_involve(sg, p);
            sg.states
                .iter()
                .enumerate()
                .any(|(i, st)| !good[i] && st.process(p).is_some())
        })
        .collect()
}

pub fn deadlock_free_on(sg: &StateGraph, ignored: &ParticipantSet) -> LivenessVerdict {
    let witness = sg.states.iter().enumerate().find_map(|(i, st)| {
        if !sg.is_stuck(i) {
            return None;
        }
        st.participants()
            .into_iter()
            .find(|p| !ignored.contains(p))
            .map(|p| (i, p))
    });
    LivenessVerdict::new(Property::DeadlockFreedom, ignored, sg, witness)
}

/// When the existential reading holds but some reachable cycle keeps a
/// non-ignored active participant waiting forever, say so.
fn postponement_note(sg: &StateGraph, ignored: &ParticipantSet) -> Option<String> {
    for scc in sccs(sg) {
        let inner: Vec<_> = sg
            .edges
            .iter()
            .filter(|(a, _, b)| scc.contains(a) && scc.contains(b))
            .collect();
        if inner.is_empty() {
            continue;
        }
        let active: ParticipantSet = scc
            .iter()
            .flat_map(|&i| sg.states[i].participants())
            .collect();
        for p in active {
            if ignored.contains(&p) || inner.iter().any(|(_, l, _)| l.involves(&p)) {
                continue;
            }
            let state = *scc.iter().next().expect("nonempty");
            return Some(format!(
                "holds under the existential-path reading, but from state {state} the run can \
                 loop forever without involving {p}; a fairness-based reading would report a lock"
            ));
        }
    }
    None
}

/// Strongly connected components, each as a sorted set of state ids.
fn sccs(sg: &StateGraph) -> Vec<BTreeSet<usize>> {
    // Tarjan, iterative
    let n = sg.len();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| sg.out_edges(i).map(|e| e.2).collect())
        .collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on[root] = true;
        while let Some(&mut (v, ref mut k)) = call.last_mut() {
            if *k < succ[v].len() {
                let w = succ[v][*k];
                *k += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on[w] = true;
                    call.push((w, 0));
                } else if on[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = BTreeSet::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on[w] = false;
                        comp.insert(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out.sort();
    out
}

/// The participant addressed at the root of `p`'s process.
pub fn top_partner(s: &Session, p: &Participant) -> Option<Participant> {
    let n = s.process(p)?;
    s.node(n).head().map(|h| h.peer.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, parse_global};

    fn p(s: &str) -> Participant {
        Participant::new(s)
    }

    #[test]
    fn depth_examples() {
        assert_eq!(depth(&GlobalGraph::end(), &p("p")), DepthValue::Finite(0));
        let g = parse_global("G = p->q:{l1 . r->s:l, l2 . G}").unwrap();
        assert_eq!(depth(&g, &p("r")), DepthValue::Infinity);
        assert_eq!(depth(&g, &p("p")), DepthValue::Finite(1));
        let v = bounded(&g);
        assert_eq!(v.witness, Some((0, p("r"))));
        // paths ending at End without meeting a participant count as infinite
        let h = parse_global("p->q:{a . r->s:x, b}").unwrap();
        assert_eq!(depth(&h, &p("r")), DepthValue::Infinity);
        let k = parse_global("p->q:{a . r->s:x, b . q->r:y}").unwrap();
        assert_eq!(depth(&k, &p("r")), DepthValue::Finite(2));
    }

    #[test]
    fn boundedness_of_the_loop_variants() {
        // r plays below the choice only through l2, and l1 ends without it
        let g = parse_global("H = r->s:l . p->q:{l1, l2 . H}").unwrap();
        let v = bounded(&g);
        assert!(!v.holds);
        assert_eq!(v.witness.map(|(_, q)| q), Some(p("r")));
        // the loop alone never mentions r
        let h = parse_global("G = r->s:l . H\nH = p->q:{l1, l2 . H}").unwrap();
        assert!(bounded(&h).holds);
    }

    #[test]
    fn deadlock_versus_lock() {
        let spec =
            parse("process P = q!l . P\nprocess Q = p?l . Q\nsession M = p: P | q: Q | r: s!x")
                .unwrap();
        let m = spec.session("M").unwrap();
        let none = ParticipantSet::new();
        let v = excluded_lock_free(m, &none).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.unwrap().participant, p("r"));
        assert!(excluded_lock_free(m, &[p("r")].into()).unwrap().holds);
        assert!(excluded_deadlock_free(m, &none).unwrap().holds);
    }

    #[test]
    fn social_media_locks_u_where_it_waits() {
        let src = include_str!("../tests/data/social_media.mpst");
        let spec = parse(src).unwrap();
        let m = spec.session("M").unwrap();
        let v = excluded_lock_free(m, &ParticipantSet::new()).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.participant, p("u"));
        // only u is left, waiting on p forever
        assert!(w.session.starts_with("u: p?req") && !w.session.contains('|'));
        assert!(excluded_lock_free(m, &[p("u")].into()).unwrap().holds);
    }

    #[test]
    fn empty_session_is_deadlock_free() {
        let spec = parse("session E = 0").unwrap();
        let v = excluded_deadlock_free(spec.session("E").unwrap(), &ParticipantSet::new()).unwrap();
        assert!(v.holds);
        assert_eq!(
            serde_json::to_value(&v).unwrap(),
            serde_json::json!({"property": "deadlock-freedom", "ignored": [], "holds": true})
        );
    }

    #[test]
    fn tarjan_finds_self_loops() {
        let spec =
            parse("process P = q!l . P\nprocess Q = p?l . Q\nsession M = p: P | q: Q").unwrap();
        let sg = crate::semantics::explore(spec.session("M").unwrap()).unwrap();
        assert_eq!(sccs(&sg), vec![BTreeSet::from([0])]);
    }
}
