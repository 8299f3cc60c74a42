//! Inference of global types and ignored sets.
//!
//! Resolution of a goal `(M, x, X)` emits a regular system of type
//! equations, a system of p-set equations and a set of p-conditions; any
//! solution of the three gives a global type `θ(X)` and an ignored set `θ(x)`
//! such that `θ(X) ⊢_θ(x) M`. The rules are nondeterministic, so
//! [`infer_each`] walks the choice tree by iterative deepening on derivation
//! size and solves every complete outcome as it is found.

mod search;
mod solve;

pub use search::{
    goal_graph_size, infer, infer_each, infer_minimal, Budget, InferError, Inference, Minimal,
    SearchStats, Solved,
};
pub use solve::{
    check_agreement, solutions, solve_pset_equations, solve_type_equations, SolveError,
    Substitution,
};

use crate::{MessageLabel, Participant, ParticipantSet, Session};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Type variable; `0` prints as `X`, others as `Yn`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TypeVar(pub u32);

/// P-set variable; `0` prints as `x`, others as `yn`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PSetVar(pub u32);

impl fmt::Display for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "X"),
            n => write!(f, "Y{n}"),
        }
    }
}

impl fmt::Display for PSetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "x"),
            n => write!(f, "y{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlobalPattern {
    End,
    Comm {
        from: Participant,
        to: Participant,
        branches: BTreeMap<MessageLabel, GlobalPattern>,
    },
    Var(TypeVar),
}

impl GlobalPattern {
    pub fn vars(&self) -> BTreeSet<TypeVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<TypeVar>) {
        match self {
            GlobalPattern::End => {}
            GlobalPattern::Var(v) => {
                out.insert(*v);
            }
            GlobalPattern::Comm { branches, .. } => {
                for b in branches.values() {
                    b.collect_vars(out);
                }
            }
        }
    }
}

impl fmt::Display for GlobalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalPattern::End => write!(f, "End"),
            GlobalPattern::Var(v) => write!(f, "{v}"),
            GlobalPattern::Comm { from, to, branches } => {
                let parts: Vec<String> = branches
                    .iter()
                    .map(|(l, b)| match b {
                        GlobalPattern::End => l.to_string(),
                        _ => format!("{l} . {b}"),
                    })
                    .collect();
                if parts.len() == 1 {
                    write!(f, "{from}->{to}:{}", parts[0])
                } else {
                    write!(f, "{from}->{to}:{{{}}}", parts.join(", "))
                }
            }
        }
    }
}

/// A union of p-set variables and a literal set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PSetPattern {
    pub vars: BTreeSet<PSetVar>,
    pub constants: ParticipantSet,
}

impl PSetPattern {
    pub fn var(v: PSetVar) -> Self {
        PSetPattern {
            vars: BTreeSet::from([v]),
            constants: ParticipantSet::new(),
        }
    }

    pub fn constant(c: ParticipantSet) -> Self {
        PSetPattern {
            vars: BTreeSet::new(),
            constants: c,
        }
    }

    pub fn eval(&self, env: &BTreeMap<PSetVar, ParticipantSet>) -> ParticipantSet {
        let mut out = self.constants.clone();
        for v in &self.vars {
            if let Some(s) = env.get(v) {
                out.extend(s.iter().cloned());
            }
        }
        out
    }
}

pub(crate) fn set_text(s: &ParticipantSet) -> String {
    let v: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

impl fmt::Display for PSetPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.vars.iter().map(|v| v.to_string()).collect();
        if !self.constants.is_empty() {
            parts.push(set_text(&self.constants));
        }
        if parts.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "{}", parts.join(" ∪ "))
        }
    }
}

/// `(plays(X) ∪ x) \ {p,q} = target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PCondition {
    pub typevar: TypeVar,
    pub psetvar: PSetVar,
    pub p: Participant,
    pub q: Participant,
    pub target: ParticipantSet,
}

impl fmt::Display for PCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cond (plays {} ∪ {}) \\ {{{},{}}} = {}",
            self.typevar,
            self.psetvar,
            self.p,
            self.q,
            set_text(&self.target)
        )
    }
}

pub type TypeEqSystem = BTreeMap<TypeVar, GlobalPattern>;
pub type PSetEqSystem = BTreeMap<PSetVar, PSetPattern>;

/// A goal `(M, x, X)` as it was resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub session: Session,
    pub psetvar: PSetVar,
    pub typevar: TypeVar,
}

/// One complete run of the rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub types: TypeEqSystem,
    pub psets: PSetEqSystem,
    pub conditions: Vec<PCondition>,
    pub root: (TypeVar, PSetVar),
    pub goals: Vec<Goal>,
    /// Number of rule applications.
    pub size: usize,
    pub weak: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ClosureError {
    #[error("{0} has no equation")]
    Unbound(String),
    #[error("{0} = {1} chains two variables")]
    Unguarded(TypeVar, TypeVar),
}

impl Outcome {
    pub fn equations_text(&self) -> String {
        let mut out = String::new();
        for (v, p) in &self.types {
            out.push_str(&format!("{v} = {p}\n"));
        }
        for (v, p) in &self.psets {
            out.push_str(&format!("{v} = {p}\n"));
        }
        for c in &self.conditions {
            out.push_str(&format!("{c}\n"));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "root": { "type": self.root.0.to_string(), "pset": self.root.1.to_string() },
            "type_equations": self.types.iter().map(|(v, p)| format!("{v} = {p}")).collect::<Vec<_>>(),
            "pset_equations": self.psets.iter().map(|(v, p)| format!("{v} = {p}")).collect::<Vec<_>>(),
            "conditions": self.conditions.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "size": self.size,
            "weak": self.weak,
        })
    }

    /// Checks that both systems are closed and the type system is guarded.
    pub fn check_closed(&self) -> Result<(), ClosureError> {
        for p in self.types.values() {
            for v in p.vars() {
                if !self.types.contains_key(&v) {
                    return Err(ClosureError::Unbound(v.to_string()));
                }
            }
        }
        for p in self.psets.values() {
            for v in &p.vars {
                if !self.psets.contains_key(v) {
                    return Err(ClosureError::Unbound(v.to_string()));
                }
            }
        }
        for (x, p) in &self.types {
            if let GlobalPattern::Var(y) = p {
                if let Some(GlobalPattern::Var(_)) = self.types.get(y) {
                    return Err(ClosureError::Unguarded(*x, *y));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::typing::derivable;
    use std::ops::ControlFlow;

    fn load(name: &str) -> crate::SpecFile {
        let path = format!("{}/tests/data/{name}.mpst", env!("CARGO_MANIFEST_DIR"));
        parse(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn set(xs: &[&str]) -> ParticipantSet {
        xs.iter().map(|x| Participant::new(x)).collect()
    }

    /// Soundness, accounting and closure for one solved outcome.
    fn check_solved(m: &Session, o: &Solved) {
        let out = &o.outcome;
        out.check_closed().unwrap();
        assert_eq!(
            out.types.len(),
            out.goals.len(),
            "a variable was bound twice"
        );
        assert_eq!(
            out.psets.len(),
            out.goals.len(),
            "a variable was bound twice"
        );
        for g in &out.goals {
            let mut lhs =
                crate::analysis::plays_at(&o.solution.graph, o.solution.types[&g.typevar]);
            lhs.extend(o.solution.psets[&g.psetvar].iter().cloned());
            assert_eq!(lhs, g.session.participants());
        }
        assert!(
            derivable(&o.global(), m, o.ignored()),
            "{}",
            out.equations_text()
        );
    }

    #[test]
    fn social_media_systems() {
        let spec = load("social_media");
        let m = spec.session("M").unwrap();
        let g = spec.global("G").unwrap();
        let inf = infer(m, &Budget::default());
        for o in &inf.outcomes {
            check_solved(m, o);
        }
        assert!(inf
            .outcomes
            .iter()
            .any(|o| o.ignored() == &set(&["u"]) && o.global() == g));
        let mut hits = Vec::new();
        infer_each(
            m,
            &Budget {
                max_size: Some(9),
                ..Budget::default()
            },
            |o| {
                if o.ignored() == &set(&["u"]) && o.global() == g {
                    hits.push(o.outcome.clone());
                }
                ControlFlow::Continue(())
            },
        );
        // the expected derivation splits `u` off before `p->q:hello`
        let out = hits
            .iter()
            .find(|o| o.types.get(&TypeVar(6)) == Some(&GlobalPattern::Var(TypeVar(7))))
            .expect("the expected derivation is among the outcomes");
        assert_eq!(
            (out.types.len(), out.psets.len(), out.conditions.len()),
            (9, 9, 7)
        );
        let text = out.equations_text();
        for line in [
            "X = q->p:hello . Y1",
            "Y2 = u->p:{dnd . Y3, grtd . Y4}",
            "Y5 = X",
            "Y6 = Y7",
            "Y8 = End",
            "x = y1",
            "y2 = y3 ∪ y4",
            "y6 = y7 ∪ {u}",
            "y8 = ∅",
            "cond (plays Y1 ∪ y1) \\ {q,p} = {u}",
        ] {
            assert!(
                text.lines().any(|l| l == line),
                "missing `{line}` in\n{text}"
            );
        }
    }

    #[test]
    fn null_session() {
        let spec = load("empty");
        let m = spec.session("M").unwrap();
        let inf = infer(m, &Budget::default());
        assert_eq!(inf.outcomes.len(), 1);
        assert!(!inf.stats.truncated);
        let out = &inf.outcomes[0].outcome;
        assert_eq!(out.equations_text(), "X = End\nx = ∅\n");
        let min = infer_minimal(m, &Budget::default()).unwrap();
        assert!(min.global.is_end(min.global.root()));
        assert!(min.ignored.is_empty());
    }

    #[test]
    fn no_matching_pair_means_weak_first() {
        let spec =
            parse("process P = q!l . P\nprocess Q = p!l . Q\nsession M = p: P | q: Q").unwrap();
        let m = spec.session("M").unwrap();
        let mut count = 0;
        infer_each(m, &Budget::default(), |o| {
            count += 1;
            assert!(matches!(
                o.outcome.types[&TypeVar(0)],
                GlobalPattern::Var(_)
            ));
            check_solved(m, o);
            ControlFlow::Continue(())
        });
        assert!(count > 0);
    }

    #[test]
    fn minimal_ignored_sets() {
        let spec = load("social_media");
        let min = infer_minimal(spec.session("M").unwrap(), &Budget::default()).unwrap();
        assert_eq!(min.ignored, set(&["u"]));
        assert_eq!(min.global, spec.global("G").unwrap());
        assert_eq!(min.weak, 1);

        let spec = load("buyer_seller");
        let min = infer_minimal(spec.session("M").unwrap(), &Budget::default()).unwrap();
        assert_eq!(min.ignored, set(&["c", "s"]));
        assert_eq!(min.global, spec.global("G").unwrap());
        assert_eq!(min.weak, 1);
    }

    #[test]
    fn budget_parsing() {
        let mut b = Budget::default();
        b.apply("size=12, outcomes=3").unwrap();
        assert_eq!(
            (b.max_size, b.max_outcomes, b.state_cap),
            (Some(12), 3, 1_000_000)
        );
        assert!(b.apply("size=0").is_err());
        assert!(b.apply("depth=3").is_err());
    }
}
