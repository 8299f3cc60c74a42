//! The judgment `G ⊢_P M`.
//!
//! Checking runs in two phases. First, every triple (global subterm,
//! session, ignored set) that a derivation of the goal could mention is
//! generated together with the rule instances that could conclude it, and the
//! greatest set of triples closed under those instances is computed. Since
//! the coinductive rules admit exactly the triples of that set, membership
//! decides the judgment. Second, a finite derivation in the inductive system
//! with hypotheses and [`Rule::Cycle`] is read off the surviving triples.
//!
//! Triples violating `plays(G) ∪ P = plays(M)` are never derivable and are
//! discarded up front; this bounds the ignored sets that need generating.

use crate::analysis::{bounded_nodes, plays_at};
use crate::terms::{Direction, GlobalGraph, Node, NodeId, Session};
use crate::{Participant, ParticipantSet};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    End,
    Comm,
    Cycle,
    Weak,
}

/// `global ⊢_ignored session`, with `global` a node of the derivation's
/// global graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Judgment {
    pub global: NodeId,
    pub session: Session,
    pub ignored: ParticipantSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationNode {
    pub rule: Rule,
    pub judgment: Judgment,
    pub premises: Vec<DerivationNode>,
    /// For [`Rule::Weak`]: the participants split off.
    pub split: Option<ParticipantSet>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub global: GlobalGraph,
    pub root: DerivationNode,
}

impl DerivationNode {
    pub fn iter(&self) -> impl Iterator<Item = &DerivationNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let n = stack.pop()?;
            stack.extend(n.premises.iter().rev());
            Some(n)
        })
    }
}

/// Name of a node in the printed form of the global type.
pub fn global_name(g: &GlobalGraph, n: NodeId) -> String {
    if g.is_end(n) {
        "End".into()
    } else if n == g.root() {
        "G".into()
    } else {
        format!("G{n}")
    }
}

fn set_text(s: &ParticipantSet) -> String {
    let v: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

impl Derivation {
    pub fn count(&self, rule: Rule) -> usize {
        self.root.iter().filter(|n| n.rule == rule).count()
    }

    /// Indented proof tree, conclusion first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (depth, n) in walk(&self.root) {
            let _ = write!(
                out,
                "{}[{:?}] {} ⊢_{} {}",
                "  ".repeat(depth),
                n.rule,
                global_name(&self.global, n.judgment.global),
                set_text(&n.judgment.ignored),
                n.judgment.session
            );
            if let Some(split) = &n.split {
                let _ = write!(out, "   (split off {})", set_text(split));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        fn node(g: &GlobalGraph, n: &DerivationNode) -> serde_json::Value {
            let mut v = serde_json::json!({
                "rule": n.rule,
                "global": global_name(g, n.judgment.global),
                "session": n.judgment.session.to_string(),
                "ignored": n.judgment.ignored,
                "premises": n.premises.iter().map(|p| node(g, p)).collect::<Vec<_>>(),
            });
            if let Some(split) = &n.split {
                v["split"] = serde_json::json!(split);
            }
            v
        }
        serde_json::json!({
            "global": crate::frontend::print_global(&self.global),
            "derivation": node(&self.global, &self.root),
        })
    }

    /// Checks the structural invariants every derivation must satisfy:
    /// participant accounting at each node and Cycle leaves closing on an
    /// ancestor hypothesis. Returns the first offending judgment.
    pub fn check_invariants(&self) -> Result<(), String> {
        fn go(g: &GlobalGraph, n: &DerivationNode, hyps: &mut Vec<Judgment>) -> Result<(), String> {
            let j = &n.judgment;
            let lhs: ParticipantSet = plays_at(g, j.global).union(&j.ignored).cloned().collect();
            if lhs != j.session.participants() {
                return Err(format!("participant accounting fails at {}", j.session));
            }
            if n.rule == Rule::Cycle && !hyps.contains(j) {
                return Err(format!("cycle without hypothesis at {}", j.session));
            }
            hyps.push(j.clone());
            for p in &n.premises {
                go(g, p, hyps)?;
            }
            hyps.pop();
            Ok(())
        }
        go(&self.global, &self.root, &mut Vec::new())
    }
}

fn walk(root: &DerivationNode) -> Vec<(usize, &DerivationNode)> {
    let mut out = Vec::new();
    let mut stack = vec![(0, root)];
    while let Some((d, n)) = stack.pop() {
        out.push((d, n));
        for p in n.premises.iter().rev() {
            stack.push((d + 1, p));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RejectionKind {
    /// The session has no matching output/input pair for the global root.
    RootMismatch,
    /// Output labels differ from the global branches, or inputs miss some.
    LabelSetMismatch,
    /// No admissible ignored set satisfies the participant equation.
    ParticipantEquationFailed,
    /// The global subterm is not bounded.
    Unbounded,
    /// The ignored sets do not add up.
    IgnoredMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub kind: RejectionKind,
    pub message: String,
    /// Judgments from the goal down to the failing one, as text.
    pub path: Vec<String>,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)?;
        for (i, j) in self.path.iter().enumerate() {
            write!(f, "\n{}{}", "  ".repeat(i), j)?;
        }
        Ok(())
    }
}

impl std::error::Error for Rejection {}

/// Evaluates `(plays(G_i) ∪ P_i) \ {p,q} = plays(residual)`.
pub fn check_participant_equation(
    g: &GlobalGraph,
    gi: NodeId,
    pi: &ParticipantSet,
    p: &Participant,
    q: &Participant,
    residual: &Session,
) -> bool {
    let mut lhs = plays_at(g, gi);
    lhs.extend(pi.iter().cloned());
    lhs.remove(p);
    lhs.remove(q);
    lhs == residual.participants()
}

type TripleId = usize;

#[derive(Clone, Debug)]
enum Alt {
    End,
    Comm(Vec<TripleId>),
    Weak(ParticipantSet, TripleId),
}

impl Alt {
    fn premises(&self) -> &[TripleId] {
        match self {
            Alt::End => &[],
            Alt::Comm(v) => v,
            Alt::Weak(_, t) => std::slice::from_ref(t),
        }
    }
}

/// Subsets of `items` in order of increasing size, then lexicographically.
pub(crate) fn subsets<T: Clone + Ord>(items: &[T]) -> Vec<BTreeSet<T>> {
    let n = items.len();
    assert!(n < 31, "too many participants for subset enumeration");
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|m| {
        (
            m.count_ones(),
            (0..n).filter(|i| m & (1 << i) != 0).collect::<Vec<_>>(),
        )
    });
    masks
        .into_iter()
        .map(|m| {
            (0..n)
                .filter(|i| m & (1 << i) != 0)
                .map(|i| items[i].clone())
                .collect()
        })
        .collect()
}

/// A decision procedure for judgments over one global graph.
pub struct Checker {
    g: GlobalGraph,
    plays: Vec<ParticipantSet>,
    bounded: Vec<bool>,
    triples: Vec<Judgment>,
    index: HashMap<Judgment, TripleId>,
    alts: Vec<Vec<Alt>>,
    /// `None` while alive; otherwise the round in which it was removed.
    removed: Vec<Option<usize>>,
}

impl Checker {
    pub fn new(g: &GlobalGraph) -> Self {
        let g = g.minimize();
        let plays = (0..g.len()).map(|n| plays_at(&g, n)).collect();
        let bounded = bounded_nodes(&g);
        Checker {
            g,
            plays,
            bounded,
            triples: Vec::new(),
            index: HashMap::new(),
            alts: Vec::new(),
            removed: Vec::new(),
        }
    }

    pub fn global(&self) -> &GlobalGraph {
        &self.g
    }

    fn accounting_ok(&self, j: &Judgment) -> bool {
        let lhs: ParticipantSet = self.plays[j.global].union(&j.ignored).cloned().collect();
        lhs == j.session.participants()
    }

    fn intern(&mut self, j: Judgment, queue: &mut VecDeque<TripleId>) -> TripleId {
        if let Some(&t) = self.index.get(&j) {
            return t;
        }
        let t = self.triples.len();
        self.index.insert(j.clone(), t);
        self.triples.push(j);
        self.alts.push(Vec::new());
        self.removed.push(None);
        queue.push_back(t);
        t
    }

    /// Rule instances concluding `j`, premises not yet interned.
    fn instances(&self, j: &Judgment) -> Vec<RawAlt> {
        let mut out = Vec::new();
        if !self.accounting_ok(j) {
            return out;
        }
        let node = self.g.node(j.global);
        if node.is_end() && j.session.is_null() && j.ignored.is_empty() {
            out.push(RawAlt::End);
        }
        // Weak: split off participants outside the global type, all ignored
        let movable: Vec<Participant> = j
            .session
            .participants()
            .into_iter()
            .filter(|p| !self.plays[j.global].contains(p) && j.ignored.contains(p))
            .collect();
        let mut splits = subsets(&movable);
        splits.retain(|s| !s.is_empty());
        splits.reverse(); // largest first
        for m2 in splits {
            let keep: ParticipantSet = j.session.participants().difference(&m2).cloned().collect();
            let premise = Judgment {
                global: j.global,
                session: j.session.restrict(&keep),
                ignored: j.ignored.difference(&m2).cloned().collect(),
            };
            out.push(RawAlt::Weak(m2, premise));
        }
        if let Ok(c) = self.comm_shape(j) {
            if self.bounded[j.global] {
                for vector in self.comm_vectors(j, &c) {
                    out.push(RawAlt::Comm(vector));
                }
            }
        }
        out
    }

    /// Checks the syntactic side conditions of Comm at `j`.
    fn comm_shape(&self, j: &Judgment) -> Result<CommShape, (RejectionKind, String)> {
        let Node::Choice { head, branches } = self.g.node(j.global) else {
            return Err((
                RejectionKind::IgnoredMismatch,
                format!(
                    "End types only the null session with no ignored participants, \
                     but participants {} remain with ignored set {}",
                    set_text(&j.session.participants()),
                    set_text(&j.ignored)
                ),
            ));
        };
        let (p, q) = (&head.from, &head.to);
        let s = &j.session;
        let pn = s.process(p);
        let qn = s.process(q);
        let p_ok = pn
            .and_then(|n| s.node(n).head())
            .is_some_and(|h| h.dir == Direction::Send && &h.peer == q);
        let q_ok = qn
            .and_then(|n| s.node(n).head())
            .is_some_and(|h| h.dir == Direction::Receive && &h.peer == p);
        if !p_ok || !q_ok {
            return Err((
                RejectionKind::RootMismatch,
                format!("global type expects {p}->{q}, but {p} does not send to {q} or {q} does not receive from {p}"),
            ));
        }
        let (pn, qn) = (pn.expect("checked"), qn.expect("checked"));
        let outs = s.node(pn).branches().expect("choice");
        let ins = s.node(qn).branches().expect("choice");
        let labels: BTreeSet<_> = branches.keys().collect();
        if outs.keys().collect::<BTreeSet<_>>() != labels {
            return Err((
                RejectionKind::LabelSetMismatch,
                format!("{p} offers labels other than those of {p}->{q}"),
            ));
        }
        if !labels.iter().all(|l| ins.contains_key(*l)) {
            return Err((
                RejectionKind::LabelSetMismatch,
                format!("{q} cannot receive every label of {p}->{q}"),
            ));
        }
        let keep: ParticipantSet = s
            .participants()
            .into_iter()
            .filter(|x| x != p && x != q)
            .collect();
        let residual = s.restrict(&keep);
        let children = branches
            .iter()
            .map(|(l, &gi)| (gi, s.with(p, outs[l]).with(q, ins[l])))
            .collect();
        Ok(CommShape {
            p: p.clone(),
            q: q.clone(),
            residual,
            children,
        })
    }

    /// Admissible ignored sets for each branch.
    fn branch_candidates(&self, j: &Judgment, c: &CommShape) -> Vec<Vec<ParticipantSet>> {
        c.children
            .iter()
            .map(|(gi, si)| {
                let have = si.participants();
                let base: ParticipantSet = have.difference(&self.plays[*gi]).cloned().collect();
                let optional: Vec<Participant> = have
                    .intersection(&self.plays[*gi])
                    .filter(|x| j.ignored.contains(*x))
                    .cloned()
                    .collect();
                subsets(&optional)
                    .into_iter()
                    .map(|extra| base.union(&extra).cloned().collect::<ParticipantSet>())
                    .filter(|pi| {
                        pi.is_subset(&j.ignored)
                            && check_participant_equation(&self.g, *gi, pi, &c.p, &c.q, &c.residual)
                    })
                    .collect()
            })
            .collect()
    }

    fn comm_vectors(&self, j: &Judgment, c: &CommShape) -> Vec<Vec<Judgment>> {
        let cands = self.branch_candidates(j, c);
        let mut out = Vec::new();
        let mut pick = vec![0usize; cands.len()];
        if cands.iter().any(|v| v.is_empty()) {
            return out;
        }
        loop {
            let union: ParticipantSet = pick
                .iter()
                .enumerate()
                .flat_map(|(i, &k)| cands[i][k].iter().cloned())
                .collect();
            if union == j.ignored {
                out.push(
                    pick.iter()
                        .enumerate()
                        .map(|(i, &k)| Judgment {
                            global: c.children[i].0,
                            session: c.children[i].1.clone(),
                            ignored: cands[i][k].clone(),
                        })
                        .collect(),
                );
            }
            // odometer
            let mut i = 0;
            loop {
                if i == pick.len() {
                    return out;
                }
                pick[i] += 1;
                if pick[i] < cands[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    }

    /// Generates all triples reachable from `goal` and prunes to the
    /// greatest consistent set.
    fn saturate(&mut self, goal: Judgment) -> TripleId {
        let mut queue = VecDeque::new();
        let root = self.intern(goal, &mut queue);
        while let Some(t) = queue.pop_front() {
            if !self.alts[t].is_empty() {
                continue;
            }
            let j = self.triples[t].clone();
            let raw = self.instances(&j);
            let mut alts = Vec::with_capacity(raw.len());
            for r in raw {
                alts.push(match r {
                    RawAlt::End => Alt::End,
                    RawAlt::Weak(m2, prem) => Alt::Weak(m2, self.intern(prem, &mut queue)),
                    RawAlt::Comm(prems) => Alt::Comm(
                        prems
                            .into_iter()
                            .map(|p| self.intern(p, &mut queue))
                            .collect(),
                    ),
                });
            }
            self.alts[t] = alts;
        }
        let mut round = 0;
        loop {
            round += 1;
            let dead: Vec<TripleId> = (0..self.triples.len())
                .filter(|&t| self.removed[t].is_none())
                .filter(|&t| {
                    !self.alts[t]
                        .iter()
                        .any(|a| a.premises().iter().all(|&p| self.removed[p].is_none()))
                })
                .collect();
            if dead.is_empty() {
                break;
            }
            for t in dead {
                self.removed[t] = Some(round);
            }
        }
        root
    }

    pub fn derivable(&mut self, goal: &Judgment) -> bool {
        let t = self.saturate(goal.clone());
        self.removed[t].is_none()
    }

    pub fn check(&mut self, goal: &Judgment) -> Result<Derivation, Rejection> {
        let t = self.saturate(goal.clone());
        if self.removed[t].is_none() {
            let root = self.extract(t, &mut Vec::new());
            Ok(Derivation {
                global: self.g.clone(),
                root,
            })
        } else {
            Err(self.explain(t))
        }
    }

    fn alive(&self, t: TripleId) -> bool {
        self.removed[t].is_none()
    }

    fn extract(&self, t: TripleId, hyps: &mut Vec<TripleId>) -> DerivationNode {
        let judgment = self.triples[t].clone();
        if hyps.contains(&t) {
            return DerivationNode {
                rule: Rule::Cycle,
                judgment,
                premises: Vec::new(),
                split: None,
            };
        }
        // End, then a Weak that empties the ignored set, then Comm, then
        // any other Weak
        let rank = |a: &Alt| match a {
            Alt::End => 0,
            Alt::Weak(_, p) if self.triples[*p].ignored.is_empty() => 1,
            Alt::Comm(_) => 2,
            Alt::Weak(..) => 3,
        };
        let alt = self.alts[t]
            .iter()
            .filter(|a| a.premises().iter().all(|&p| self.alive(p)))
            .min_by_key(|a| rank(a))
            .expect("alive triple has a live rule instance");
        hyps.push(t);
        let (rule, split) = match alt {
            Alt::End => (Rule::End, None),
            Alt::Comm(_) => (Rule::Comm, None),
            Alt::Weak(m2, _) => (Rule::Weak, Some(m2.clone())),
        };
        let premises = alt
            .premises()
            .iter()
            .map(|&p| self.extract(p, hyps))
            .collect();
        hyps.pop();
        DerivationNode {
            rule,
            judgment,
            premises,
            split,
        }
    }

    fn describe(&self, t: TripleId) -> String {
        let j = &self.triples[t];
        format!(
            "{} ⊢_{} {}",
            global_name(&self.g, j.global),
            set_text(&j.ignored),
            j.session
        )
    }

    /// Finds the first violated side condition, following the premise that
    /// was discarded earliest.
    fn explain(&self, root: TripleId) -> Rejection {
        let mut path = Vec::new();
        let mut t = root;
        loop {
            path.push(self.describe(t));
            let j = self.triples[t].clone();
            if let Some((kind, message)) = self.local_failure(&j) {
                return Rejection {
                    kind,
                    message,
                    path,
                };
            }
            let next = self.alts[t]
                .iter()
                .filter_map(|a| {
                    a.premises()
                        .iter()
                        .copied()
                        .filter(|&p| !self.alive(p))
                        .min_by_key(|&p| self.removed[p])
                })
                .min_by_key(|&p| self.removed[p]);
            match next {
                Some(p) if self.removed[p] < self.removed[t] => t = p,
                _ => {
                    return Rejection {
                        kind: RejectionKind::IgnoredMismatch,
                        message: "no rule instance applies".into(),
                        path,
                    }
                }
            }
        }
    }

    /// A side condition failing at `j` itself, if any.
    fn local_failure(&self, j: &Judgment) -> Option<(RejectionKind, String)> {
        let node = self.g.node(j.global);
        if node.is_end() {
            if j.session.participants() == j.ignored {
                return None; // Weak then End
            }
            return self.comm_shape(j).err();
        }
        if !self.bounded[j.global] {
            return Some((
                RejectionKind::Unbounded,
                format!("{} is not bounded", global_name(&self.g, j.global)),
            ));
        }
        // a Weak split may be needed before Comm applies
        let outside: ParticipantSet = j
            .session
            .participants()
            .difference(&self.plays[j.global])
            .filter(|x| j.ignored.contains(*x))
            .cloned()
            .collect();
        let keep: ParticipantSet = j
            .session
            .participants()
            .difference(&outside)
            .cloned()
            .collect();
        let core = Judgment {
            global: j.global,
            session: j.session.restrict(&keep),
            ignored: j.ignored.difference(&outside).cloned().collect(),
        };
        let shapes = [j, &core];
        let mut first_err = None;
        for cand in shapes {
            match self.comm_shape(cand) {
                Err(e) => {
                    first_err.get_or_insert(e);
                }
                Ok(c) => {
                    let cands = self.branch_candidates(cand, &c);
                    if let Some(i) = cands.iter().position(|v| v.is_empty()) {
                        let (gi, _) = &c.children[i];
                        return Some((
                            RejectionKind::ParticipantEquationFailed,
                            format!(
                                "branch {} of {}->{}: no ignored set within {} makes (plays({}) ∪ P_i) \\ {{{},{}}} equal {}",
                                i + 1,
                                c.p,
                                c.q,
                                set_text(&cand.ignored),
                                global_name(&self.g, *gi),
                                c.p,
                                c.q,
                                set_text(&c.residual.participants())
                            ),
                        ));
                    }
                    if self.comm_vectors(cand, &c).is_empty() {
                        return Some((
                            RejectionKind::IgnoredMismatch,
                            format!(
                                "the branch ignored sets cannot add up to {}",
                                set_text(&cand.ignored)
                            ),
                        ));
                    }
                    if self.accounting_ok(cand) {
                        return None;
                    }
                }
            }
        }
        if !self.accounting_ok(j) && !self.accounting_ok(&core) {
            if let Some(e @ (RejectionKind::RootMismatch | RejectionKind::LabelSetMismatch, _)) =
                first_err.clone()
            {
                return Some(e);
            }
            return Some((
                RejectionKind::IgnoredMismatch,
                format!(
                    "plays({}) ∪ {} differs from the session participants {}",
                    global_name(&self.g, j.global),
                    set_text(&j.ignored),
                    set_text(&j.session.participants())
                ),
            ));
        }
        first_err
    }
}

struct CommShape {
    p: Participant,
    q: Participant,
    residual: Session,
    children: Vec<(NodeId, Session)>,
}

enum RawAlt {
    End,
    Comm(Vec<Judgment>),
    Weak(ParticipantSet, Judgment),
}

/// Decides `g ⊢_ignored m`, returning a derivation or the reason it fails.
pub fn typecheck(
    g: &GlobalGraph,
    m: &Session,
    ignored: &ParticipantSet,
) -> Result<Derivation, Rejection> {
    let mut checker = Checker::new(g);
    let root = checker.global().root();
    checker.check(&Judgment {
        global: root,
        session: m.normalize(),
        ignored: ignored.clone(),
    })
}

pub fn derivable(g: &GlobalGraph, m: &Session, ignored: &ParticipantSet) -> bool {
    let mut checker = Checker::new(g);
    let root = checker.global().root();
    checker.derivable(&Judgment {
        global: root,
        session: m.normalize(),
        ignored: ignored.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, parse_global};

    fn set(xs: &[&str]) -> ParticipantSet {
        xs.iter().map(|x| Participant::new(x)).collect()
    }

    #[test]
    fn end_axiom() {
        let spec = parse("session E = 0").unwrap();
        let d = typecheck(&GlobalGraph::end(), spec.session("E").unwrap(), &set(&[])).unwrap();
        assert_eq!(d.root.rule, Rule::End);
        assert!(d.root.premises.is_empty());
    }

    #[test]
    fn bystander_needs_to_be_ignored() {
        let spec = parse(
            "process P = q!l . P\nprocess Q = p?l . Q\nglobal G = p->q:l . G\n\
             session M = p: P | q: Q | r: s!x",
        )
        .unwrap();
        let g = spec.global("G").unwrap();
        let m = spec.session("M").unwrap();
        let err = typecheck(&g, m, &set(&[])).unwrap_err();
        assert_eq!(err.kind, RejectionKind::ParticipantEquationFailed);
        let d = typecheck(&g, m, &set(&["r"])).unwrap();
        assert_eq!(d.root.rule, Rule::Weak);
        assert_eq!(d.root.split, Some(set(&["r"])));
        let comm = &d.root.premises[0];
        assert_eq!(comm.rule, Rule::Comm);
        assert_eq!(comm.premises[0].rule, Rule::Cycle);
        d.check_invariants().unwrap();
    }

    #[test]
    fn mismatches() {
        let spec = parse(
            "session A = p: r!a | q: p?a\nsession B = p: q!{a, b} | q: p?{a, b}\n\
             session C = p: q!a | q: p?b",
        )
        .unwrap();
        let g = parse_global("p->q:a").unwrap();
        let e = typecheck(&g, spec.session("A").unwrap(), &set(&[])).unwrap_err();
        assert_eq!(e.kind, RejectionKind::RootMismatch);
        let e = typecheck(&g, spec.session("B").unwrap(), &set(&[])).unwrap_err();
        assert_eq!(e.kind, RejectionKind::LabelSetMismatch);
        let e = typecheck(&g, spec.session("C").unwrap(), &set(&[])).unwrap_err();
        assert_eq!(e.kind, RejectionKind::LabelSetMismatch);
    }

    #[test]
    fn unbounded_global_is_refused() {
        let spec = parse(
            "process P = q!{l1 . r!l, l2 . P}\nprocess Q = p?{l1, l2 . Q}\n\
             session M = p: P | q: Q | r: p?l\nglobal G = p->q:{l1 . p->r:l, l2 . G}",
        )
        .unwrap();
        let g = spec.global("G").unwrap();
        let m = spec.session("M").unwrap();
        for ign in [set(&[]), set(&["r"])] {
            let e = typecheck(&g, m, &ign).unwrap_err();
            assert_eq!(e.kind, RejectionKind::Unbounded);
        }
    }

    #[test]
    fn participant_equation() {
        let g = parse_global("p->q:a . r->p:b").unwrap();
        let spec = parse("session S = s: t!x").unwrap();
        let resid = spec.session("S").unwrap();
        assert!(!check_participant_equation(
            &g,
            g.root(),
            &set(&[]),
            &Participant::new("p"),
            &Participant::new("q"),
            resid
        ));
        let e = parse("session E = 0").unwrap();
        let end = GlobalGraph::end();
        assert!(check_participant_equation(
            &end,
            0,
            &set(&[]),
            &Participant::new("p"),
            &Participant::new("q"),
            e.session("E").unwrap()
        ));
    }

    fn load(name: &str) -> crate::SpecFile {
        let path = format!("{}/tests/data/{name}.mpst", env!("CARGO_MANIFEST_DIR"));
        parse(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn social_media_derivation() {
        let spec = load("social_media");
        let g = spec.global("G").unwrap();
        let m = spec.session("M").unwrap();
        let d = typecheck(&g, m, spec.ignored("I").unwrap()).unwrap();
        d.check_invariants().unwrap();
        assert_eq!(d.count(Rule::Weak), 1);
        assert_eq!(d.count(Rule::End), 1);
        assert_eq!(d.count(Rule::Cycle), 1);
        assert_eq!(d.count(Rule::Comm), 6);
        let weak = d.root.iter().find(|n| n.rule == Rule::Weak).unwrap();
        assert_eq!(global_name(&d.global, weak.judgment.global), "G5");
        assert_eq!(weak.split, Some(set(&["u"])));
        let e = typecheck(&g, m, &set(&[])).unwrap_err();
        assert_eq!(e.kind, RejectionKind::ParticipantEquationFailed);
        assert!(e.path.last().unwrap().starts_with("G4"), "{e}");
        assert!(e.message.contains("plays(G5)"), "{e}");
    }

    #[test]
    fn buyer_seller_derivation() {
        let spec = load("buyer_seller");
        let g = spec.global("G").unwrap();
        let m = spec.session("M").unwrap();
        assert!(typecheck(&g, m, &set(&[])).is_err());
        let d = typecheck(&g, m, &set(&["s", "c"])).unwrap();
        d.check_invariants().unwrap();
        assert_eq!(d.root.rule, Rule::Comm);
        let kinds: Vec<Rule> = d.root.premises.iter().map(|n| n.rule).collect();
        assert_eq!(kinds, vec![Rule::Cycle, Rule::Weak]);
        let weak = &d.root.premises[1];
        assert_eq!(weak.split, Some(set(&["c", "s"])));
        assert_eq!(weak.premises[0].rule, Rule::End);
    }

    #[test]
    fn subset_order() {
        let s = subsets(&[1, 2, 3]);
        let v: Vec<Vec<i32>> = s.into_iter().map(|x| x.into_iter().collect()).collect();
        assert_eq!(
            v,
            vec![
                vec![],
                vec![1],
                vec![2],
                vec![3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
                vec![1, 2, 3]
            ]
        );
    }
}
