//! Executable checks of the metatheory on concrete triples.
//!
//! Starting from an accepted triple `(G, M, P)`, every triple reachable by a
//! session step (subject reduction) or by a global step (session fidelity) is
//! visited. At each one the participant lemma, the top-partner lemma,
//! replacement of non-playing participants and excluded lock-freedom are
//! checked as well. Nothing here is needed for checking or inference; it
//! exists to cross-validate them.

use crate::analysis::{lock_free_on, plays_global, top_partner};
use crate::frontend::{print_global, SpecFile};
use crate::random::{random_process, Shape};
use crate::semantics::{
    explore_with_limit, global_reduce, global_transitions, reduce, session_transitions, CommLabel,
};
use crate::terms::GlobalGraph;
use crate::typing::{subsets, typecheck, Checker, Judgment, Rejection};
use crate::{Participant, ParticipantSet, Session};
use rand::Rng;
use serde::Serialize;
use std::collections::{HashMap, HashSet, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Obligation {
    /// `plays(G) ∪ P = plays(M)`.
    Participants,
    /// `p ∈ plays(G)` implies the top partner of `p` is in `plays(G)`.
    TopPartner,
    /// A participant outside `plays(G)` may get any process.
    Replacement,
    SubjectReduction,
    SessionFidelity,
    LockFreedom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub obligation: Obligation,
    pub global: String,
    pub session: String,
    pub ignored: ParticipantSet,
    pub detail: String,
}

/// Limits for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaConfig {
    /// Triples visited before giving up (the run is then marked truncated).
    /// Residuals of a global type need not be finitely many, e.g. a step of
    /// an independent loop can be taken ahead of a prefix again and again,
    /// so some cut-off is always needed.
    pub max_triples: usize,
    /// Random processes tried per replaceable participant and triple.
    pub replacements: usize,
    pub state_cap: usize,
    pub shape: Shape,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            max_triples: 200,
            replacements: 2,
            state_cap: 100_000,
            shape: Shape::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MetaReport {
    /// Whether the starting triple is derivable; if not, nothing is checked.
    pub accepted: bool,
    pub triples: usize,
    pub session_steps: usize,
    pub global_steps: usize,
    pub replacements: usize,
    /// Distinct session states among the visited triples.
    pub session_states: usize,
    pub truncated: bool,
    pub violations: Vec<Violation>,
}

impl MetaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

type Triple = (GlobalGraph, Session, ParticipantSet);

struct Run<'a, R> {
    cfg: &'a MetaConfig,
    rng: &'a mut R,
    checkers: HashMap<GlobalGraph, Checker>,
    seen: HashSet<Triple>,
    sessions: HashSet<Session>,
    /// Triples whose session has not been visited yet come first, so every
    /// reachable session state is covered before any cut-off.
    fresh: VecDeque<Triple>,
    revisit: VecDeque<Triple>,
    report: MetaReport,
}

impl<R: Rng> Run<'_, R> {
    fn accepts(&mut self, g: &GlobalGraph, m: &Session, ignored: &ParticipantSet) -> bool {
        let checker = self
            .checkers
            .entry(g.clone())
            .or_insert_with(|| Checker::new(g));
        let root = checker.global().root();
        checker.derivable(&Judgment {
            global: root,
            session: m.normalize(),
            ignored: ignored.clone(),
        })
    }

    /// Some `P' ⊆ ignored` typing `m` with `g`.
    fn smaller(
        &mut self,
        g: &GlobalGraph,
        m: &Session,
        ignored: &ParticipantSet,
    ) -> Option<ParticipantSet> {
        let items: Vec<Participant> = ignored.iter().cloned().collect();
        subsets(&items).into_iter().find(|p| self.accepts(g, m, p))
    }

    fn violation(&mut self, o: Obligation, t: &Triple, detail: String) {
        self.report.violations.push(Violation {
            obligation: o,
            global: print_global(&t.0),
            session: t.1.to_string(),
            ignored: t.2.clone(),
            detail,
        });
    }

    fn push(&mut self, t: Triple) {
        if self.seen.contains(&t) {
            return;
        }
        self.seen.insert(t.clone());
        if self.sessions.insert(t.1.clone()) {
            self.fresh.push_back(t);
        } else {
            self.revisit.push_back(t);
        }
    }

    fn pop(&mut self) -> Option<Triple> {
        self.fresh.pop_front().or_else(|| self.revisit.pop_front())
    }

    fn successor(&mut self, o: Obligation, t: &Triple, l: &CommLabel, g: GlobalGraph, m: Session) {
        match self.smaller(&g, &m, &t.2) {
            Some(p) => self.push((g, m, p)),
            None => self.violation(
                o,
                t,
                format!(
                    "after {l}: no subset of the ignored set types {m} with {}",
                    print_global(&g)
                ),
            ),
        }
    }

    fn visit(&mut self, t: &Triple) {
        let (g, m, ignored) = t;
        let plays = plays_global(g);
        let mut lhs = plays.clone();
        lhs.extend(ignored.iter().cloned());
        if lhs != m.participants() {
            self.violation(
                Obligation::Participants,
                t,
                "plays(G) ∪ P differs from plays(M)".into(),
            );
        }
        for p in &plays {
            if let Some(q) = top_partner(m, p) {
                if !plays.contains(&q) {
                    self.violation(
                        Obligation::TopPartner,
                        t,
                        format!("top partner {q} of {p} is not in plays(G)"),
                    );
                }
            }
        }
        match explore_with_limit(m, self.cfg.state_cap) {
            Ok(sg) => {
                let v = lock_free_on(&sg, ignored);
                if let Some(w) = v.witness {
                    self.violation(
                        Obligation::LockFreedom,
                        t,
                        format!("{} is locked in {}", w.participant, w.session),
                    );
                }
            }
            Err(e) => log::warn!("lock-freedom not checked: {e}"),
        }
        let outsiders: Vec<Participant> = m.participants().difference(&plays).cloned().collect();
        for p in &outsiders {
            let peers: Vec<Participant> = m.participants().into_iter().filter(|q| q != p).collect();
            for _ in 0..self.cfg.replacements {
                let proc = random_process(self.rng, &peers, &self.cfg.shape);
                let replaced = m.replace(p, &proc);
                self.report.replacements += 1;
                if self.smaller(g, &replaced, ignored).is_none() {
                    self.violation(
                        Obligation::Replacement,
                        t,
                        format!("replacing {p} gives the untypable {replaced}"),
                    );
                }
            }
        }
        for (l, next) in session_transitions(m) {
            self.report.session_steps += 1;
            let pq = l.plays();
            if pq.is_subset(&plays) {
                match global_reduce(g, &l) {
                    Some(g2) => self.successor(Obligation::SubjectReduction, t, &l, g2, next),
                    None => self.violation(
                        Obligation::SubjectReduction,
                        t,
                        format!("the session does {l} but the global type cannot"),
                    ),
                }
            } else if pq.is_disjoint(&plays) {
                self.successor(Obligation::SubjectReduction, t, &l, g.clone(), next);
            } else {
                self.violation(
                    Obligation::SubjectReduction,
                    t,
                    format!("{l} mixes a player and a non-player of G"),
                );
            }
        }
        for (l, g2) in global_transitions(g) {
            self.report.global_steps += 1;
            match reduce(m, &l) {
                Some(next) => self.successor(Obligation::SessionFidelity, t, &l, g2, next),
                None => self.violation(
                    Obligation::SessionFidelity,
                    t,
                    format!("the global type does {l} but the session cannot"),
                ),
            }
        }
    }
}

/// Runs every check on the triples reachable from `(g, m, ignored)`.
pub fn check_triple(
    g: &GlobalGraph,
    m: &Session,
    ignored: &ParticipantSet,
    rng: &mut impl Rng,
    cfg: &MetaConfig,
) -> MetaReport {
    let mut run = Run {
        cfg,
        rng,
        checkers: HashMap::new(),
        seen: HashSet::new(),
        sessions: HashSet::new(),
        fresh: VecDeque::new(),
        revisit: VecDeque::new(),
        report: MetaReport::default(),
    };
    let g = g.minimize();
    let m = m.normalize();
    if !run.accepts(&g, &m, ignored) {
        return run.report;
    }
    run.report.accepted = true;
    run.push((g, m, ignored.clone()));
    let mut visited = HashSet::new();
    while let Some(t) = run.pop() {
        if run.report.triples == cfg.max_triples {
            run.report.truncated = true;
            break;
        }
        run.report.triples += 1;
        visited.insert(t.1.clone());
        run.visit(&t);
    }
    run.report.session_states = visited.len();
    run.report
}

/// One `(global, session, ignored)` combination of a file.
#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub global: String,
    pub session: String,
    pub ignored: String,
    pub report: MetaReport,
    /// Why the combination is not derivable, when it is not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
}

/// Every combination of a named global type, session and ignored set in
/// `spec`, in definition order. Combinations that are not derivable are
/// listed with `accepted: false` and carry no obligations.
pub fn check_file(spec: &SpecFile, rng: &mut impl Rng, cfg: &MetaConfig) -> Vec<FileEntry> {
    let mut out = Vec::new();
    let globals: Vec<String> = spec.global_names().map(str::to_string).collect();
    for gname in &globals {
        let g = spec.global(gname).expect("listed name");
        for (sname, s) in &spec.sessions {
            for (iname, ignored) in &spec.ignored_sets {
                let report = check_triple(&g, s, ignored, rng, cfg);
                let rejection = if report.accepted {
                    None
                } else {
                    typecheck(&g, s, ignored).err()
                };
                out.push(FileEntry {
                    global: gname.clone(),
                    session: sname.clone(),
                    ignored: iname.clone(),
                    report,
                    rejection,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::random::rng;

    fn load(name: &str) -> SpecFile {
        let path = format!("{}/tests/data/{name}.mpst", env!("CARGO_MANIFEST_DIR"));
        parse(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn run(name: &str, g: &str, m: &str, i: &str) -> MetaReport {
        let spec = load(name);
        check_triple(
            &spec.global(g).unwrap(),
            spec.session(m).unwrap(),
            spec.ignored(i).unwrap(),
            &mut rng(1),
            &MetaConfig::default(),
        )
    }

    #[test]
    fn social_media_obligations_hold() {
        let r = run("social_media", "G", "M", "I");
        assert!(r.accepted);
        assert!(r.passed(), "{:#?}", r.violations);
        assert!(r.triples > 1 && r.session_steps > 0 && r.global_steps > 0);
        assert!(!r.truncated);
    }

    #[test]
    fn buyer_seller_obligations_hold() {
        let r = run("buyer_seller", "G", "M", "I");
        assert!(r.accepted);
        assert!(r.passed(), "{:#?}", r.violations);
        assert!(r.replacements > 0);
    }

    #[test]
    fn unbounded_triple_is_never_accepted() {
        let r = run("unbounded", "G", "M", "I");
        assert!(!r.accepted);
        assert_eq!(r.triples, 0);
        let entries = check_file(&load("unbounded"), &mut rng(1), &MetaConfig::default());
        let kinds: Vec<_> = entries
            .iter()
            .filter_map(|e| e.rejection.as_ref().map(|r| r.kind))
            .collect();
        assert_eq!(kinds, vec![crate::typing::RejectionKind::Unbounded]);
    }

    #[test]
    fn a_broken_checker_would_be_caught() {
        // Feed the suite a triple the checker rejects but force a visit, to
        // make sure violations are reported at all.
        let spec = load("social_media");
        let g = spec.global("G").unwrap();
        let m = spec.session("M").unwrap().clone();
        let cfg = MetaConfig::default();
        let mut r = rng(1);
        let mut run = Run {
            cfg: &cfg,
            rng: &mut r,
            checkers: HashMap::new(),
            seen: HashSet::new(),
            sessions: HashSet::new(),
            fresh: VecDeque::new(),
            revisit: VecDeque::new(),
            report: MetaReport::default(),
        };
        run.visit(&(g, m, ParticipantSet::new()));
        let kinds: HashSet<Obligation> =
            run.report.violations.iter().map(|v| v.obligation).collect();
        assert!(kinds.contains(&Obligation::LockFreedom));
    }

    #[test]
    fn empty_file_is_vacuous() {
        let spec = parse("").unwrap();
        assert!(check_file(&spec, &mut rng(1), &MetaConfig::default()).is_empty());
    }
}
