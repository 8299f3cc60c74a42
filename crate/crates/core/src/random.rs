//! Seeded random terms for the property suites.
//!
//! Every generator takes an explicit RNG so runs are reproducible from a
//! seed. Processes and global types are built as raw node tables and then
//! canonicalized, so unreachable nodes simply disappear.

use crate::inference::{infer_minimal, Budget};
use crate::terms::{CommHead, Direction, GlobalGraph, Node, ProcessGraph, ProcessHead};
use crate::{MessageLabel, Participant, ParticipantSet, Session};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// The seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed;

const NAMES: [&str; 6] = ["p", "q", "r", "s", "t", "v"];
const LABELS: [&str; 4] = ["a", "b", "c", "d"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size limits for generated terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub max_participants: usize,
    /// Non-terminal nodes per process or global type.
    pub max_nodes: usize,
    pub max_branches: usize,
    pub labels: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_participants: 4,
            max_nodes: 5,
            max_branches: 2,
            labels: 3,
        }
    }
}

pub fn participants(n: usize) -> Vec<Participant> {
    NAMES[..n.min(NAMES.len())]
        .iter()
        .map(|x| Participant::new(x))
        .collect()
}

fn branches(rng: &mut impl Rng, shape: &Shape, targets: usize) -> BTreeMap<MessageLabel, usize> {
    let k = rng.gen_range(1..=shape.max_branches.min(shape.labels).max(1));
    let labels: Vec<&str> = LABELS[..shape.labels.clamp(1, LABELS.len())]
        .choose_multiple(rng, k)
        .copied()
        .collect();
    labels
        .into_iter()
        .map(|l| (MessageLabel::new(l), rng.gen_range(0..targets)))
        .collect()
}

/// A process of `me` talking to `peers`, with at most `shape.max_nodes`
/// communications. Node `n` of the raw table is the terminated process and
/// is picked as a target about as often as any other node.
pub fn random_process(rng: &mut impl Rng, peers: &[Participant], shape: &Shape) -> ProcessGraph {
    if peers.is_empty() {
        return ProcessGraph::end();
    }
    let n = rng.gen_range(1..=shape.max_nodes.max(1));
    let mut nodes: Vec<Node<ProcessHead>> = (0..n)
        .map(|_| Node::Choice {
            head: ProcessHead {
                dir: if rng.gen_bool(0.5) {
                    Direction::Send
                } else {
                    Direction::Receive
                },
                peer: peers.choose(rng).expect("nonempty").clone(),
            },
            branches: branches(rng, shape, n + 1),
        })
        .collect();
    nodes.push(Node::End);
    ProcessGraph::from_nodes(nodes, 0).expect("generated nodes are valid")
}

/// Swaps sends and receives and readdresses every action to `peer`.
pub fn dual(g: &ProcessGraph, peer: &Participant) -> ProcessGraph {
    let nodes = g
        .nodes()
        .iter()
        .map(|n| match n {
            Node::End => Node::End,
            Node::Choice { head, branches } => Node::Choice {
                head: ProcessHead {
                    dir: match head.dir {
                        Direction::Send => Direction::Receive,
                        Direction::Receive => Direction::Send,
                    },
                    peer: peer.clone(),
                },
                branches: branches.clone(),
            },
        })
        .collect();
    ProcessGraph::from_nodes(nodes, g.root()).expect("dual of a valid graph is valid")
}

/// A session of two to `shape.max_participants` participants.
///
/// Half of the sessions bind each participant to an arbitrary process; the
/// other half pair participants up with dual processes (leaving any odd one
/// out arbitrary), which makes typable sessions with nonempty global types
/// common.
pub fn random_session(rng: &mut impl Rng, shape: &Shape) -> Session {
    let k = rng.gen_range(2..=shape.max_participants.max(2));
    let ps = participants(k);
    let mut procs: Vec<(Participant, ProcessGraph)> = Vec::new();
    if rng.gen_bool(0.5) {
        for p in &ps {
            let peers: Vec<Participant> = ps.iter().filter(|q| *q != p).cloned().collect();
            procs.push((p.clone(), random_process(rng, &peers, shape)));
        }
    } else {
        let mut order = ps.clone();
        order.shuffle(rng);
        for pair in order.chunks(2) {
            match pair {
                [a, b] => {
                    let pa = random_process(rng, std::slice::from_ref(b), shape);
                    procs.push((b.clone(), dual(&pa, a)));
                    procs.push((a.clone(), pa));
                }
                [a] => {
                    let peers: Vec<Participant> = ps.iter().filter(|q| *q != a).cloned().collect();
                    procs.push((a.clone(), random_process(rng, &peers, shape)));
                }
                _ => unreachable!("chunks of two"),
            }
        }
    }
    Session::from_processes(procs).expect("participants are distinct")
}

/// A global type over `ps` with at most `shape.max_nodes` communications.
/// It need not be bounded.
pub fn random_global(rng: &mut impl Rng, ps: &[Participant], shape: &Shape) -> GlobalGraph {
    if ps.len() < 2 {
        return GlobalGraph::end();
    }
    let n = rng.gen_range(1..=shape.max_nodes.max(1));
    let mut nodes: Vec<Node<CommHead>> = (0..n)
        .map(|_| {
            let pair: Vec<&Participant> = ps.choose_multiple(rng, 2).collect();
            Node::Choice {
                head: CommHead {
                    from: pair[0].clone(),
                    to: pair[1].clone(),
                },
                branches: branches(rng, shape, n + 1),
            }
        })
        .collect();
    nodes.push(Node::End);
    GlobalGraph::from_nodes(nodes, 0).expect("generated nodes are valid")
}

/// A derivable triple `(G, M, P)` found by minimal inference.
#[derive(Clone, Debug)]
pub struct TypableTriple {
    pub global: GlobalGraph,
    pub session: Session,
    pub ignored: ParticipantSet,
}

/// `count` random sessions with their minimal inferred typing. Sessions for
/// which inference finds nothing within `budget` are skipped, so the result
/// may be shorter than `count` only if `attempts` runs out.
pub fn typable_triples(
    rng: &mut impl Rng,
    shape: &Shape,
    budget: &Budget,
    count: usize,
    attempts: usize,
) -> Vec<TypableTriple> {
    let mut out = Vec::new();
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let session = random_session(rng, shape);
        if let Ok(m) = infer_minimal(&session, budget) {
            out.push(TypableTriple {
                global: m.global,
                session,
                ignored: m.ignored,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::session_transitions;

    #[test]
    fn seeded_generation_is_reproducible() {
        let shape = Shape::default();
        let a: Vec<String> = (0..20)
            .scan(rng(7), |r, _| Some(random_session(r, &shape).to_string()))
            .collect();
        let b: Vec<String> = (0..20)
            .scan(rng(7), |r, _| Some(random_session(r, &shape).to_string()))
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn shapes_are_respected() {
        let shape = Shape::default();
        let mut r = rng(1);
        for _ in 0..200 {
            let s = random_session(&mut r, &shape);
            assert!(s.participants().len() <= shape.max_participants);
            for (_, n) in s.active() {
                assert!(s.env().graph.reachable(n).len() <= shape.max_nodes + 1);
            }
            let g = random_global(&mut r, &participants(3), &shape);
            assert!(g.len() <= shape.max_nodes + 1);
        }
    }

    #[test]
    fn dual_pairs_can_talk() {
        let shape = Shape::default();
        let (p, q) = (Participant::new("p"), Participant::new("q"));
        let mut r = rng(3);
        for _ in 0..50 {
            let a = random_process(&mut r, std::slice::from_ref(&q), &shape);
            let s = Session::from_processes([(q.clone(), dual(&a, &p)), (p.clone(), a)]).unwrap();
            assert!(s.is_null() || !session_transitions(&s).is_empty());
        }
    }
}
