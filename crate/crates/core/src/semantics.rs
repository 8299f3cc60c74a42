//! Labelled transition systems of sessions and of global types.

use crate::terms::{Direction, GlobalGraph, Node, NodeId, Session};
use crate::{MessageLabel, Participant, ParticipantSet};
use serde::{Serialize, Serializer};
use std::collections::{HashMap, VecDeque};
use std::fmt;
use thiserror::Error;

pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("state space exceeds {limit} states")]
    StateLimitExceeded { limit: usize },
}

/// `p λ q`: `p` sends `λ` to `q`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommLabel {
    pub sender: Participant,
    pub message: MessageLabel,
    pub receiver: Participant,
}

impl CommLabel {
    pub fn new(sender: Participant, message: MessageLabel, receiver: Participant) -> Self {
        assert_ne!(sender, receiver, "a participant cannot talk to itself");
        CommLabel {
            sender,
            message,
            receiver,
        }
    }

    pub fn plays(&self) -> ParticipantSet {
        [self.sender.clone(), self.receiver.clone()].into()
    }

    pub fn involves(&self, p: &Participant) -> bool {
        &self.sender == p || &self.receiver == p
    }
}

impl fmt::Display for CommLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.sender, self.message, self.receiver)
    }
}

impl fmt::Debug for CommLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for CommLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A finite prefix of a trace.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Trace(pub Vec<CommLabel>);

impl Trace {
    pub fn plays(&self) -> ParticipantSet {
        self.0.iter().flat_map(|l| l.plays()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// All one-step transitions, ordered by sender then label.
pub fn session_transitions(s: &Session) -> Vec<(CommLabel, Session)> {
    let mut out = Vec::new();
    for (p, n) in s.active() {
        let Node::Choice {
            head,
            branches: outs,
        } = s.node(n)
        else {
            continue;
        };
        if head.dir != Direction::Send {
            continue;
        }
        let q = &head.peer;
        let Some(m) = s.process(q) else { continue };
        let Node::Choice {
            head: qh,
            branches: ins,
        } = s.node(m)
        else {
            continue;
        };
        if qh.dir != Direction::Receive || &qh.peer != p {
            continue;
        }
        if !outs.keys().all(|l| ins.contains_key(l)) {
            continue;
        }
        for (l, &pn) in outs {
            let next = s.with(p, pn).with(q, ins[l]);
            out.push((CommLabel::new(p.clone(), l.clone(), q.clone()), next));
        }
    }
    out
}

pub fn reduce(s: &Session, label: &CommLabel) -> Option<Session> {
    let n = s.process(&label.sender)?;
    let m = s.process(&label.receiver)?;
    let (
        Node::Choice {
            head: ph,
            branches: outs,
        },
        Node::Choice {
            head: qh,
            branches: ins,
        },
    ) = (s.node(n), s.node(m))
    else {
        return None;
    };
    let ok = ph.dir == Direction::Send
        && ph.peer == label.receiver
        && qh.dir == Direction::Receive
        && qh.peer == label.sender
        && outs.keys().all(|l| ins.contains_key(l));
    if !ok {
        return None;
    }
    let pn = *outs.get(&label.message)?;
    Some(
        s.with(&label.sender, pn)
            .with(&label.receiver, ins[&label.message]),
    )
}

/// The reachable states of a session. State 0 is the initial one.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub states: Vec<Session>,
    pub edges: Vec<(usize, CommLabel, usize)>,
    pub initial: usize,
    succ: Vec<Vec<usize>>,
}

impl StateGraph {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Indices into `edges` leaving `state`.
    pub fn out_edges(&self, state: usize) -> impl Iterator<Item = &(usize, CommLabel, usize)> {
        self.succ[state].iter().map(|&e| &self.edges[e])
    }

    pub fn is_stuck(&self, state: usize) -> bool {
        self.succ[state].is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "states": self.states.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|(a, l, b)| serde_json::json!({
                "from": a, "label": l.to_string(), "to": b,
            })).collect::<Vec<_>>(),
            "initial": self.initial,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph states {\n  rankdir=LR;\n");
        for (i, s) in self.states.iter().enumerate() {
            let shape = if i == self.initial {
                "doublecircle"
            } else {
                "box"
            };
            out.push_str(&format!(
                "  s{i} [shape={shape}, label=\"{}\"];\n",
                escape(&s.to_string())
            ));
        }
        for (a, l, b) in &self.edges {
            out.push_str(&format!(
                "  s{a} -> s{b} [label=\"{}\"];\n",
                escape(&l.to_string())
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn explore(s: &Session) -> Result<StateGraph, SemanticsError> {
    explore_with_limit(s, DEFAULT_STATE_LIMIT)
}

/// Breadth-first closure of [`session_transitions`].
pub fn explore_with_limit(s: &Session, limit: usize) -> Result<StateGraph, SemanticsError> {
    let init = s.normalize();
    let mut index: HashMap<Session, usize> = HashMap::from([(init.clone(), 0)]);
    let mut states = vec![init];
    let mut edges = Vec::new();
    let mut succ = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (label, next) in session_transitions(&states[i]) {
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() >= limit {
                        return Err(SemanticsError::StateLimitExceeded { limit });
                    }
                    let j = states.len();
                    index.insert(next.clone(), j);
                    states.push(next);
                    succ.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            succ[i].push(edges.len());
            edges.push((i, label, j));
        }
    }
    Ok(StateGraph {
        states,
        edges,
        initial: 0,
        succ,
    })
}

/// Labels of all communications occurring in `g`, in a stable order.
fn candidate_labels(g: &GlobalGraph) -> Vec<CommLabel> {
    let mut out: Vec<CommLabel> = g
        .reachable(g.root())
        .into_iter()
        .filter_map(|n| match g.node(n) {
            Node::Choice { head, branches } => Some(
                branches
                    .keys()
                    .map(|l| CommLabel::new(head.from.clone(), l.clone(), head.to.clone()))
                    .collect::<Vec<_>>(),
            ),
            Node::End => None,
        })
        .flatten()
        .collect();
    out.sort();
    out.dedup();
    out
}

enum Memo {
    InProgress,
    Done(Option<NodeId>),
}

struct Stepper<'a> {
    g: &'a GlobalGraph,
    label: &'a CommLabel,
    extra: Vec<Node<crate::CommHead>>,
    memo: HashMap<NodeId, Memo>,
}

impl Stepper<'_> {
    /// The successor of node `n` under the label, as an id in the extended
    /// arena, or `None` when no finite derivation exists.
    fn step(&mut self, n: NodeId) -> Option<NodeId> {
        match self.memo.get(&n) {
            Some(Memo::InProgress) => return None,
            Some(Memo::Done(r)) => return *r,
            None => {}
        }
        self.memo.insert(n, Memo::InProgress);
        let result = match self.g.node(n) {
            Node::End => None,
            Node::Choice { head, branches } => {
                let l = self.label;
                if head.from == l.sender && head.to == l.receiver {
                    branches.get(&l.message).copied()
                } else if !l.involves(&head.from) && !l.involves(&head.to) {
                    let mut next = std::collections::BTreeMap::new();
                    let mut ok = true;
                    for (lab, &c) in branches {
                        match self.step(c) {
                            Some(m) => {
                                next.insert(lab.clone(), m);
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    ok.then(|| {
                        self.extra.push(Node::Choice {
                            head: head.clone(),
                            branches: next,
                        });
                        self.g.len() + self.extra.len() - 1
                    })
                } else {
                    None
                }
            }
        };
        self.memo.insert(n, Memo::Done(result));
        result
    }
}

/// The successor of `g` under `label`, if the label is enabled.
pub fn global_reduce(g: &GlobalGraph, label: &CommLabel) -> Option<GlobalGraph> {
    let mut st = Stepper {
        g,
        label,
        extra: Vec::new(),
        memo: HashMap::new(),
    };
    let m = st.step(g.root())?;
    let mut nodes = g.nodes().to_vec();
    nodes.extend(st.extra);
    Some(GlobalGraph::from_raw(nodes, m))
}

/// All transitions of a global type, sorted by label.
pub fn global_transitions(g: &GlobalGraph) -> Vec<(CommLabel, GlobalGraph)> {
    candidate_labels(g)
        .into_iter()
        .filter_map(|l| global_reduce(g, &l).map(|next| (l, next)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, parse_global};

    fn lab(s: &str) -> CommLabel {
        let v: Vec<&str> = s.split(' ').collect();
        CommLabel::new(
            Participant::new(v[0]),
            MessageLabel::new(v[1]),
            Participant::new(v[2]),
        )
    }

    #[test]
    fn input_must_cover_output_labels() {
        let spec = parse("session A = p: q!a | q: p?b\nsession B = p: q!a | q: p?{a, b}").unwrap();
        assert!(session_transitions(spec.session("A").unwrap()).is_empty());
        let t = session_transitions(spec.session("B").unwrap());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, lab("p a q"));
        assert!(t[0].1.is_null());
    }

    #[test]
    fn reduce_agrees_with_transitions() {
        let spec = parse("session B = p: q!{a, c} | q: p?{a, b, c.r!x} | r: q?x").unwrap();
        let s = spec.session("B").unwrap();
        for (l, next) in session_transitions(s) {
            assert_eq!(reduce(s, &l), Some(next));
        }
        assert_eq!(reduce(s, &lab("p b q")), None);
        assert_eq!(reduce(s, &lab("q x r")), None);
    }

    #[test]
    fn explicit_and_inner_global_steps() {
        let g = parse_global("p->q:{a . r->s:x, b . q->p:y}").unwrap();
        let t = global_transitions(&g);
        let labels: Vec<String> = t.iter().map(|(l, _)| l.to_string()).collect();
        assert_eq!(labels, ["p a q", "p b q"]);

        let g2 = parse_global("G2 = r->s:l . p->q:{l1, l2 . G2}").unwrap();
        let next = global_reduce(&g2, &lab("p l1 q")).unwrap();
        assert_eq!(next, parse_global("r->s:l").unwrap());
        assert!(global_transitions(&GlobalGraph::end()).is_empty());
    }

    #[test]
    fn cyclic_inner_step_is_not_enabled() {
        // r s x occurs only behind the loop: no finite derivation
        let g = parse_global("G = p->q:{a . G, b . r->s:x}").unwrap();
        assert_eq!(global_reduce(&g, &lab("r x s")), None);
    }

    #[test]
    fn explore_limit() {
        let spec =
            parse("process P = q!a . P\nprocess Q = p?a . Q\nsession M = p: P | q: Q").unwrap();
        let sg = explore(spec.session("M").unwrap()).unwrap();
        assert_eq!(sg.len(), 1);
        assert_eq!(sg.edges.len(), 1);
        let spec = parse("session M = p: q!a.q!a | q: p?a.p?a").unwrap();
        assert_eq!(
            explore_with_limit(spec.session("M").unwrap(), 2).unwrap_err(),
            SemanticsError::StateLimitExceeded { limit: 2 }
        );
    }
}
