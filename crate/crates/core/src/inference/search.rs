//! Goal resolution and the search over rule choices.

use super::solve::{solve, NoSolution, Substitution};
use super::{GlobalPattern, Goal, Outcome, PCondition, PSetPattern, PSetVar, TypeVar};
use crate::analysis::locked_participants;
use crate::semantics::{explore_with_limit, session_transitions};
use crate::terms::{Direction, GlobalGraph, Node};
use crate::typing::subsets;
use crate::{Participant, ParticipantSet, Session};
use serde::Serialize;
use std::collections::{BTreeMap, HashSet, VecDeque};
use std::ops::ControlFlow;
use std::rc::Rc;
use thiserror::Error;

/// Search limits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Maximum number of rule applications in one derivation. `None` means
    /// four times the number of goals the session can give rise to.
    pub max_size: Option<usize>,
    pub max_outcomes: usize,
    /// Maximum number of search nodes (and of sessions when sizing).
    pub state_cap: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_size: None,
            max_outcomes: 64,
            state_cap: 1_000_000,
        }
    }
}

impl Budget {
    /// Defaults overridden by `MPST_BUDGET`, e.g. `size=40,outcomes=8,states=50000`.
    pub fn from_env() -> Result<Self, String> {
        let mut b = Budget::default();
        if let Ok(text) = std::env::var("MPST_BUDGET") {
            b.apply(&text)?;
        }
        Ok(b)
    }

    pub fn apply(&mut self, text: &str) -> Result<(), String> {
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{item}`"))?;
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("`{v}` is not a number"))?;
            if n == 0 {
                return Err(format!("budget `{k}` must be positive"));
            }
            match k.trim() {
                "size" => self.max_size = Some(n),
                "outcomes" => self.max_outcomes = n,
                "states" => self.state_cap = n,
                other => return Err(format!("unknown budget key `{other}`")),
            }
        }
        Ok(())
    }

    pub fn size_for(&self, s: &Session) -> usize {
        self.max_size
            .unwrap_or_else(|| 4 * goal_graph_size(s, self.state_cap))
    }
}

/// Number of distinct sessions that can occur in goals for `s`: everything
/// reachable by communication, restricted to any subset of participants.
pub fn goal_graph_size(s: &Session, cap: usize) -> usize {
    let start = s.normalize();
    let mut seen: HashSet<Session> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(m) = queue.pop_front() {
        if seen.len() >= cap {
            break;
        }
        for (_, next) in session_transitions(&m) {
            let next = next.normalize();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut all: HashSet<Session> = HashSet::new();
    for m in &seen {
        let ps: Vec<Participant> = m.participants().into_iter().collect();
        for keep in subsets(&ps) {
            all.insert(m.restrict(&keep).normalize());
            if all.len() >= cap {
                return cap;
            }
        }
    }
    all.len()
}

/// An outcome together with its solution.
#[derive(Clone, Debug)]
pub struct Solved {
    pub outcome: Outcome,
    pub solution: Substitution,
}

impl Solved {
    pub fn global(&self) -> GlobalGraph {
        self.solution.global(self.outcome.root.0)
    }

    pub fn ignored(&self) -> &ParticipantSet {
        self.solution.ignored(self.outcome.root.1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub max_size: usize,
    pub explored: usize,
    /// The search stopped at a cap, so the enumeration may be incomplete.
    pub truncated: bool,
    /// Outcomes rejected only because the least p-sets broke an equation.
    pub equality_rejections: usize,
}

#[derive(Clone, Debug)]
pub struct Inference {
    pub outcomes: Vec<Solved>,
    pub stats: SearchStats,
}

#[derive(Clone, Debug)]
pub struct Minimal {
    pub global: GlobalGraph,
    pub ignored: ParticipantSet,
    pub weak: usize,
    pub outcome: Outcome,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InferError {
    #[error("no solution within the budget{}", if *.truncated { " (search truncated)" } else { "" })]
    NoSolutionWithinBudget { truncated: bool },
}

struct HypNode {
    session: Session,
    goal: (TypeVar, PSetVar),
    parent: Option<Rc<HypNode>>,
}

#[derive(Clone)]
struct Pending {
    goal: Goal,
    hyps: Option<Rc<HypNode>>,
    after_weak: bool,
}

struct Partial {
    agenda: Vec<Pending>,
    types: Vec<(TypeVar, GlobalPattern)>,
    psets: Vec<(PSetVar, PSetPattern)>,
    conds: Vec<PCondition>,
    goals: Vec<Goal>,
    next: u32,
    size: usize,
    weak: usize,
    /// Union of everything split off so far; a lower bound on `θ(x)`.
    splits: ParticipantSet,
}

/// Lengths and counters to restore after trying one alternative.
struct Mark {
    agenda: usize,
    types: usize,
    psets: usize,
    conds: usize,
    next: u32,
    weak: usize,
    splits: ParticipantSet,
}

impl Partial {
    fn start(s: &Session) -> Self {
        Partial {
            agenda: vec![Pending {
                goal: Goal {
                    session: s.normalize(),
                    psetvar: PSetVar(0),
                    typevar: TypeVar(0),
                },
                hyps: None,
                after_weak: false,
            }],
            types: Vec::new(),
            psets: Vec::new(),
            conds: Vec::new(),
            goals: Vec::new(),
            next: 1,
            size: 0,
            weak: 0,
            splits: ParticipantSet::new(),
        }
    }

    fn mark(&self) -> Mark {
        Mark {
            agenda: self.agenda.len(),
            types: self.types.len(),
            psets: self.psets.len(),
            conds: self.conds.len(),
            next: self.next,
            weak: self.weak,
            splits: self.splits.clone(),
        }
    }

    fn reset(&mut self, m: &Mark) {
        self.agenda.truncate(m.agenda);
        self.types.truncate(m.types);
        self.psets.truncate(m.psets);
        self.conds.truncate(m.conds);
        self.next = m.next;
        self.weak = m.weak;
        self.splits.clone_from(&m.splits);
    }

    fn outcome(&self) -> Outcome {
        Outcome {
            types: self.types.iter().cloned().collect(),
            psets: self.psets.iter().cloned().collect(),
            conditions: self.conds.clone(),
            root: (TypeVar(0), PSetVar(0)),
            goals: self.goals.clone(),
            size: self.size,
            weak: self.weak,
        }
    }

    fn fresh(&mut self) -> (TypeVar, PSetVar) {
        let n = self.next;
        self.next += 1;
        (TypeVar(n), PSetVar(n))
    }
}

trait Visitor {
    fn prune(&self, _st: &Partial) -> bool {
        false
    }
    fn complete(&mut self, st: &Partial) -> ControlFlow<()>;
}

/// Depth-first search completing only derivations of exactly `limit` rule
/// applications; callers deepen `limit` one step at a time.
struct Engine {
    limit: usize,
    cap: usize,
    explored: usize,
    capped: bool,
    /// Some branch was cut by the size limit.
    cut: bool,
}

impl Engine {
    fn run(&mut self, st: &mut Partial, v: &mut dyn Visitor) -> ControlFlow<()> {
        self.explored += 1;
        if self.explored > self.cap {
            self.capped = true;
            return ControlFlow::Break(());
        }
        if st.size + st.agenda.len() > self.limit {
            self.cut = true;
            return ControlFlow::Continue(());
        }
        if v.prune(st) {
            return ControlFlow::Continue(());
        }
        let Some(pending) = st.agenda.pop() else {
            if st.size == self.limit {
                return v.complete(st);
            }
            return ControlFlow::Continue(());
        };
        st.goals.push(pending.goal.clone());
        st.size += 1;
        let flow = self.expand(st, &pending, v);
        st.size -= 1;
        st.goals.pop();
        st.agenda.push(pending);
        flow
    }

    fn expand(
        &mut self,
        st: &mut Partial,
        pending: &Pending,
        v: &mut dyn Visitor,
    ) -> ControlFlow<()> {
        let Goal {
            session,
            psetvar: x,
            typevar: tx,
        } = &pending.goal;
        let (x, tx) = (*x, *tx);
        let mark = st.mark();

        // [End]
        if session.is_null() {
            st.types.push((tx, GlobalPattern::End));
            st.psets.push((x, PSetPattern::default()));
            let flow = self.run(st, v);
            st.reset(&mark);
            flow?;
        }

        // [Cycle], oldest hypothesis first
        let mut hyps = Vec::new();
        let mut h = pending.hyps.clone();
        while let Some(node) = h {
            h = node.parent.clone();
            hyps.push(node);
        }
        for node in hyps.iter().rev() {
            if node.session == *session {
                st.types.push((tx, GlobalPattern::Var(node.goal.0)));
                st.psets.push((x, PSetPattern::var(node.goal.1)));
                let flow = self.run(st, v);
                st.reset(&mark);
                flow?;
            }
        }

        // [Comm], senders in participant order
        let hyp = Rc::new(HypNode {
            session: session.clone(),
            goal: (tx, x),
            parent: pending.hyps.clone(),
        });
        for (p, n) in session.active() {
            let Node::Choice {
                head,
                branches: outs,
            } = session.node(n)
            else {
                continue;
            };
            if head.dir != Direction::Send {
                continue;
            }
            let q = &head.peer;
            let Some(m) = session.process(q) else {
                continue;
            };
            let Node::Choice {
                head: qh,
                branches: ins,
            } = session.node(m)
            else {
                continue;
            };
            if qh.dir != Direction::Receive
                || &qh.peer != p
                || !outs.keys().all(|l| ins.contains_key(l))
            {
                continue;
            }
            let target: ParticipantSet = session
                .participants()
                .into_iter()
                .filter(|r| r != p && r != q)
                .collect();
            let mut branches = BTreeMap::new();
            let mut union = PSetPattern::default();
            let mut children = Vec::new();
            for (l, &pn) in outs {
                let (ty, y) = st.fresh();
                branches.insert(l.clone(), GlobalPattern::Var(ty));
                union.vars.insert(y);
                st.conds.push(PCondition {
                    typevar: ty,
                    psetvar: y,
                    p: p.clone(),
                    q: q.clone(),
                    target: target.clone(),
                });
                children.push(Pending {
                    goal: Goal {
                        session: session.with(p, pn).with(q, ins[l]).normalize(),
                        psetvar: y,
                        typevar: ty,
                    },
                    hyps: Some(hyp.clone()),
                    after_weak: false,
                });
            }
            st.types.push((
                tx,
                GlobalPattern::Comm {
                    from: p.clone(),
                    to: q.clone(),
                    branches,
                },
            ));
            st.psets.push((x, union));
            st.agenda.extend(children.into_iter().rev());
            let flow = self.run(st, v);
            st.reset(&mark);
            flow?;
        }

        // [Weak], never twice in a row
        if !pending.after_weak {
            let ps: Vec<Participant> = session.participants().into_iter().collect();
            for split in subsets(&ps).into_iter().filter(|s| !s.is_empty()) {
                let keep: ParticipantSet =
                    session.participants().difference(&split).cloned().collect();
                let (ty, y) = st.fresh();
                st.types.push((tx, GlobalPattern::Var(ty)));
                st.psets.push((
                    x,
                    PSetPattern {
                        vars: [y].into(),
                        constants: split.clone(),
                    },
                ));
                st.weak += 1;
                st.splits.extend(split.iter().cloned());
                st.agenda.push(Pending {
                    goal: Goal {
                        session: session.restrict(&keep).normalize(),
                        psetvar: y,
                        typevar: ty,
                    },
                    hyps: pending.hyps.clone(),
                    after_weak: true,
                });
                let flow = self.run(st, v);
                st.reset(&mark);
                flow?;
            }
        }
        ControlFlow::Continue(())
    }
}

fn solve_partial(st: &Partial, stats: &mut SearchStats) -> Option<Solved> {
    let outcome = st.outcome();
    match solve(&outcome.types, &outcome.psets, &outcome.conditions) {
        Ok(solution) => Some(Solved { outcome, solution }),
        Err(NoSolution::Equality(v)) => {
            stats.equality_rejections += 1;
            log::info!(
                "outcome of size {} rejected at the p-set equation for {v}:\n{}",
                outcome.size,
                outcome.equations_text()
            );
            None
        }
        Err(_) => None,
    }
}

struct Enumerate<'a> {
    stats: &'a mut SearchStats,
    f: &'a mut dyn FnMut(&Solved) -> ControlFlow<()>,
}

impl Visitor for Enumerate<'_> {
    fn complete(&mut self, st: &Partial) -> ControlFlow<()> {
        match solve_partial(st, self.stats) {
            Some(solved) => (self.f)(&solved),
            None => ControlFlow::Continue(()),
        }
    }
}

/// Runs the rules on `(s, x, X)` by iterative deepening on derivation size
/// and calls `f` on every solvable outcome, smallest derivations first.
pub fn infer_each(
    s: &Session,
    budget: &Budget,
    mut f: impl FnMut(&Solved) -> ControlFlow<()>,
) -> SearchStats {
    let mut stats = SearchStats {
        max_size: budget.size_for(s),
        ..SearchStats::default()
    };
    let mut explored = 0;
    for level in 1..=stats.max_size {
        let mut engine = Engine {
            limit: level,
            cap: budget.state_cap.saturating_sub(explored),
            explored: 0,
            capped: false,
            cut: false,
        };
        let mut visitor = Enumerate {
            stats: &mut stats,
            f: &mut f,
        };
        let flow = engine.run(&mut Partial::start(s), &mut visitor);
        explored += engine.explored;
        if engine.capped {
            stats.truncated = true;
        }
        if flow.is_break() || !engine.cut {
            break;
        }
        if level == stats.max_size {
            stats.truncated = true;
        }
    }
    stats.explored = explored;
    stats
}

/// Collects up to `budget.max_outcomes` solved outcomes. Outcomes with the
/// same solution as an earlier one are dropped.
pub fn infer(s: &Session, budget: &Budget) -> Inference {
    let mut outcomes = Vec::new();
    let mut seen = HashSet::new();
    let mut stats = infer_each(s, budget, |o| {
        if !seen.insert((o.global(), o.ignored().clone())) {
            return ControlFlow::Continue(());
        }
        outcomes.push(o.clone());
        if outcomes.len() >= budget.max_outcomes {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    if outcomes.len() >= budget.max_outcomes {
        stats.truncated = true;
    }
    Inference { outcomes, stats }
}

type Key = (usize, usize, ParticipantSet);

struct BestFirst<'a> {
    best: Option<(Key, Solved)>,
    stats: &'a mut SearchStats,
}

impl Visitor for BestFirst<'_> {
    fn prune(&self, st: &Partial) -> bool {
        // every split participant ends up in θ(x)
        match &self.best {
            Some(((n, w, best), _)) => {
                let here = (st.splits.len(), st.weak);
                // at equal counts the ignored set can only be `splits`
                here > (*n, *w) || (here == (*n, *w) && st.splits >= *best)
            }
            None => false,
        }
    }

    fn complete(&mut self, st: &Partial) -> ControlFlow<()> {
        if let Some(solved) = solve_partial(st, self.stats) {
            let key = (solved.ignored().len(), st.weak, solved.ignored().clone());
            if self.best.as_ref().is_none_or(|(k, _)| key < *k) {
                self.best = Some((key, solved));
            }
        }
        ControlFlow::Continue(())
    }
}

/// A solution with the smallest ignored set, then fewest [Weak] steps, then
/// the lexicographically least ignored set. Derivations are tried by
/// increasing size, as in [`infer_each`], with branch and bound on top.
pub fn infer_minimal(s: &Session, budget: &Budget) -> Result<Minimal, InferError> {
    let max_size = budget.size_for(s);
    let mut stats = SearchStats {
        max_size,
        ..SearchStats::default()
    };
    // a typed session is lock-free outside its ignored set, so every
    // participant that can get locked must be ignored; once a solution
    // ignores exactly those, deepening stops after the current size
    let floor = explore_with_limit(s, budget.state_cap)
        .map(|sg| locked_participants(&sg))
        .unwrap_or_default();
    let mut visitor = BestFirst {
        best: None,
        stats: &mut stats,
    };
    let (mut explored, mut capped, mut cut) = (0, false, false);
    for level in 1..=max_size {
        let mut engine = Engine {
            limit: level,
            cap: budget.state_cap.saturating_sub(explored),
            explored: 0,
            capped: false,
            cut: false,
        };
        let _ = engine.run(&mut Partial::start(s), &mut visitor);
        explored += engine.explored;
        capped |= engine.capped;
        cut = engine.cut;
        let optimal = matches!(&visitor.best, Some(((n, _, _), _)) if *n == floor.len());
        if capped || !cut || optimal {
            cut = false;
            break;
        }
    }
    let best = visitor.best.take();
    stats.explored = explored;
    stats.truncated = capped || cut;
    match best {
        Some(((_, weak, ignored), solved)) => {
            debug_assert!(
                crate::typing::derivable(&solved.global(), s, &ignored),
                "inferred triple must type"
            );
            Ok(Minimal {
                global: solved.global(),
                ignored,
                weak,
                outcome: solved.outcome,
                stats,
            })
        }
        None => Err(InferError::NoSolutionWithinBudget {
            truncated: stats.truncated,
        }),
    }
}
