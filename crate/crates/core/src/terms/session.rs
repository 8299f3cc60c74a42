use super::graph::{bisimilar, Graph, Node, NodeId, ProcessGraph, ProcessHead};
use super::{Participant, TermError};
use crate::ParticipantSet;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// The shared arena of process states that sessions point into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessEnv {
    pub graph: ProcessGraph,
    /// Definition names, used only for printing.
    pub names: BTreeMap<NodeId, String>,
}

impl ProcessEnv {
    pub fn new(graph: ProcessGraph, names: BTreeMap<NodeId, String>) -> Self {
        ProcessEnv { graph, names }
    }

    /// An arena holding only the terminated process.
    pub fn empty() -> Self {
        ProcessEnv {
            graph: Graph::end(),
            names: BTreeMap::new(),
        }
    }

    pub fn node(&self, id: NodeId) -> &Node<ProcessHead> {
        self.graph.node(id)
    }

    /// Renders the process at `id`, using definition names where available.
    pub fn render(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.render_into(id, &mut Vec::new(), true, &mut out);
        out
    }

    fn render_into(&self, id: NodeId, stack: &mut Vec<NodeId>, top: bool, out: &mut String) {
        if !top {
            if let Some(name) = self.names.get(&id) {
                out.push_str(name);
                return;
            }
        }
        match self.graph.node(id) {
            Node::End => out.push('0'),
            Node::Choice { head, branches } => {
                if stack.contains(&id) {
                    out.push_str(&format!("@{id}"));
                    return;
                }
                stack.push(id);
                out.push_str(&format!("{}{}", head.peer, head.dir.symbol()));
                let many = branches.len() > 1;
                if many {
                    out.push('{');
                }
                for (i, (label, child)) in branches.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(label.as_str());
                    if !self.graph.is_end(*child) {
                        out.push('.');
                        self.render_into(*child, stack, false, out);
                    }
                }
                if many {
                    out.push('}');
                }
                stack.pop();
            }
        }
    }
}

/// A multiparty session: participants bound to states of a shared arena.
///
/// Equality and hashing ignore bindings to terminated processes, so two
/// values are equal exactly when they are structurally congruent (given a
/// shared canonical arena).
#[derive(Clone)]
pub struct Session {
    env: Arc<ProcessEnv>,
    bindings: BTreeMap<Participant, NodeId>,
}

impl Session {
    /// Builds a normalized session. Participants must be distinct.
    pub fn new(
        env: Arc<ProcessEnv>,
        bindings: impl IntoIterator<Item = (Participant, NodeId)>,
    ) -> Result<Self, TermError> {
        let mut map = BTreeMap::new();
        for (p, n) in bindings {
            if map.insert(p.clone(), n).is_some() {
                return Err(TermError::DuplicateParticipant(p.to_string()));
            }
        }
        Ok(Session::from_raw(env, map).normalize())
    }

    /// Keeps bindings exactly as given, including terminated ones.
    pub fn from_raw(env: Arc<ProcessEnv>, bindings: BTreeMap<Participant, NodeId>) -> Self {
        Session { env, bindings }
    }

    /// The null session.
    pub fn empty(env: Arc<ProcessEnv>) -> Self {
        Session {
            env,
            bindings: BTreeMap::new(),
        }
    }

    /// Builds a session from independent process graphs, merging them into
    /// one canonical arena.
    pub fn from_processes(
        procs: impl IntoIterator<Item = (Participant, ProcessGraph)>,
    ) -> Result<Self, TermError> {
        let mut arena = ProcessGraph::end();
        let mut raw = Vec::new();
        for (p, g) in procs {
            let (union, offset) = arena.disjoint_union(&g);
            arena = union;
            raw.push((p, g.root() + offset));
        }
        let roots: Vec<NodeId> = raw.iter().map(|(_, n)| *n).collect();
        let mut all = vec![arena.root()];
        all.extend(&roots);
        let (graph, mapped) = arena.minimize_roots(&all);
        let env = Arc::new(ProcessEnv::new(graph, BTreeMap::new()));
        Session::new(
            env,
            raw.into_iter()
                .zip(mapped.into_iter().skip(1))
                .map(|((p, _), n)| (p, n)),
        )
    }

    pub fn env(&self) -> &Arc<ProcessEnv> {
        &self.env
    }

    /// All bindings, terminated ones included when built raw.
    pub fn bindings(&self) -> &BTreeMap<Participant, NodeId> {
        &self.bindings
    }

    /// Active bindings in participant order.
    pub fn active(&self) -> impl Iterator<Item = (&Participant, NodeId)> + '_ {
        self.bindings
            .iter()
            .filter(|(_, &n)| !self.env.graph.is_end(n))
            .map(|(p, &n)| (p, n))
    }

    pub fn normalize(&self) -> Session {
        Session {
            env: self.env.clone(),
            bindings: self.active().map(|(p, n)| (p.clone(), n)).collect(),
        }
    }

    pub fn participants(&self) -> ParticipantSet {
        self.active().map(|(p, _)| p.clone()).collect()
    }

    pub fn is_null(&self) -> bool {
        self.active().next().is_none()
    }

    /// The state of `p`, if active.
    pub fn process(&self, p: &Participant) -> Option<NodeId> {
        self.bindings
            .get(p)
            .copied()
            .filter(|&n| !self.env.graph.is_end(n))
    }

    pub fn node(&self, id: NodeId) -> &Node<ProcessHead> {
        self.env.node(id)
    }

    /// Rebinds `p` to `node` in the same arena; End nodes are erased.
    pub fn with(&self, p: &Participant, node: NodeId) -> Session {
        let mut bindings = self.bindings.clone();
        if self.env.graph.is_end(node) {
            bindings.remove(p);
        } else {
            bindings.insert(p.clone(), node);
        }
        Session {
            env: self.env.clone(),
            bindings,
        }
    }

    /// Keeps only the participants in `keep`.
    pub fn restrict(&self, keep: &ParticipantSet) -> Session {
        Session {
            env: self.env.clone(),
            bindings: self
                .active()
                .filter(|(p, _)| keep.contains(*p))
                .map(|(p, n)| (p.clone(), n))
                .collect(),
        }
    }

    /// Rebinds `p` to a process from another graph. The arena is extended
    /// and re-minimized; other bindings keep their meaning.
    pub fn replace(&self, p: &Participant, process: &ProcessGraph) -> Session {
        let (union, offset) = self.env.graph.disjoint_union(process);
        let mut keys: Vec<Participant> = Vec::new();
        let mut roots = vec![union.root()];
        for (q, n) in self.active() {
            if q != p {
                keys.push(q.clone());
                roots.push(n);
            }
        }
        keys.push(p.clone());
        roots.push(process.root() + offset);
        let (graph, mapped) = union.minimize_roots(&roots);
        let env = Arc::new(ProcessEnv::new(graph, BTreeMap::new()));
        let bindings = keys.into_iter().zip(mapped.into_iter().skip(1)).collect();
        Session::from_raw(env, bindings).normalize()
    }
}

impl PartialEq for Session {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.env, &other.env) || self.env == other.env)
            && self.active().eq(other.active())
    }
}

impl Eq for Session {}

impl Hash for Session {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for (p, n) in self.active() {
            p.hash(state);
            n.hash(state);
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_null() {
            return f.write_str("0");
        }
        for (i, (p, n)) in self.active().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{p}: {}", self.env.render(n))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Session({self})")
    }
}

pub fn normalize_session(s: &Session) -> Session {
    s.normalize()
}

pub fn participants(s: &Session) -> ParticipantSet {
    s.participants()
}

/// Structural congruence up to bisimilarity of the bound processes.
pub fn sessions_equivalent(a: &Session, b: &Session) -> bool {
    if Arc::ptr_eq(&a.env, &b.env) || a.env == b.env {
        return a == b;
    }
    let pa: Vec<_> = a.active().collect();
    let pb: Vec<_> = b.active().collect();
    pa.len() == pb.len()
        && pa
            .iter()
            .zip(&pb)
            .all(|((p, n), (q, m))| p == q && bisimilar(&a.env.graph, *n, &b.env.graph, *m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{build_system, Direction, Equation, MessageLabel, Term};

    fn env() -> (Arc<ProcessEnv>, NodeId, NodeId) {
        // P = q!a.P   Z = 0
        let sys = build_system(&[
            Equation {
                name: "P".into(),
                body: Term::Choice {
                    head: ProcessHead {
                        dir: Direction::Send,
                        peer: Participant::new("q"),
                    },
                    branches: vec![(MessageLabel::new("a"), Term::Ref("P".into()))],
                },
            },
            Equation {
                name: "Z".into(),
                body: Term::End,
            },
        ])
        .unwrap();
        let p = sys.get("P").unwrap();
        let z = sys.get("Z").unwrap();
        (Arc::new(ProcessEnv::new(sys.graph, BTreeMap::new())), p, z)
    }

    #[test]
    fn terminated_bindings_are_erased() {
        let (env, p, z) = env();
        let s = Session::new(
            env.clone(),
            [(Participant::new("p"), z), (Participant::new("q"), p)],
        )
        .unwrap();
        assert_eq!(s.participants().len(), 1);
        assert_eq!(s.bindings().len(), 1);
        let only_end = Session::new(env.clone(), [(Participant::new("p"), z)]).unwrap();
        assert_eq!(only_end, Session::empty(env));
    }

    #[test]
    fn duplicate_participant() {
        let (env, p, _) = env();
        let err = Session::new(
            env,
            [(Participant::new("p"), p), (Participant::new("p"), p)],
        );
        assert_eq!(err, Err(TermError::DuplicateParticipant("p".into())));
    }

    #[test]
    fn cross_arena_equivalence() {
        let (env, p, _) = env();
        let a = Session::new(env, [(Participant::new("r"), p)]).unwrap();
        let b =
            Session::from_processes([(Participant::new("r"), a.env().graph.subgraph(p))]).unwrap();
        assert!(sessions_equivalent(&a, &b));
        assert_eq!(format!("{a}"), "r: q!a.@0".replace("@0", &format!("@{p}")));
    }
}
