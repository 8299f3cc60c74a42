//! Solving the emitted systems.

use super::{GlobalPattern, PCondition, PSetEqSystem, PSetVar, TypeEqSystem, TypeVar};
use crate::analysis::{bounded_nodes, plays_at};
use crate::terms::{CommHead, GlobalGraph, Node, NodeId};
use crate::ParticipantSet;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("{0} is only defined through other variables")]
    Unguarded(TypeVar),
    #[error("{0} has no equation")]
    Unbound(TypeVar),
}

/// A solution: every type variable mapped to a node of one shared canonical
/// graph, every p-set variable to a set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub graph: GlobalGraph,
    pub types: BTreeMap<TypeVar, NodeId>,
    pub psets: BTreeMap<PSetVar, ParticipantSet>,
}

impl Substitution {
    pub fn global(&self, v: TypeVar) -> GlobalGraph {
        self.graph.subgraph(self.types[&v])
    }

    pub fn ignored(&self, v: PSetVar) -> &ParticipantSet {
        &self.psets[&v]
    }
}

/// The unique regular solution of `eqs`, as one canonical graph.
pub fn solve_type_equations(
    eqs: &TypeEqSystem,
) -> Result<(GlobalGraph, BTreeMap<TypeVar, NodeId>), SolveError> {
    // follow variable links to a productive equation
    let mut target: BTreeMap<TypeVar, TypeVar> = BTreeMap::new();
    for &v in eqs.keys() {
        let mut cur = v;
        let mut seen = vec![v];
        while let GlobalPattern::Var(next) = &eqs[&cur] {
            if !eqs.contains_key(next) {
                return Err(SolveError::Unbound(*next));
            }
            if seen.contains(next) {
                return Err(SolveError::Unguarded(v));
            }
            seen.push(*next);
            cur = *next;
        }
        target.insert(v, cur);
    }
    let productive: Vec<TypeVar> = eqs
        .keys()
        .copied()
        .filter(|v| !matches!(eqs[v], GlobalPattern::Var(_)))
        .collect();
    let slot: BTreeMap<TypeVar, NodeId> = productive
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let mut nodes: Vec<Node<CommHead>> = vec![Node::End; productive.len()];

    fn build(
        p: &GlobalPattern,
        nodes: &mut Vec<Node<CommHead>>,
        slot: &BTreeMap<TypeVar, NodeId>,
        target: &BTreeMap<TypeVar, TypeVar>,
    ) -> Result<Node<CommHead>, SolveError> {
        Ok(match p {
            GlobalPattern::End => Node::End,
            GlobalPattern::Var(_) => unreachable!("variables are resolved by the caller"),
            GlobalPattern::Comm { from, to, branches } => {
                let mut out = BTreeMap::new();
                for (l, b) in branches {
                    let id = match b {
                        GlobalPattern::Var(v) => {
                            let t = target.get(v).ok_or(SolveError::Unbound(*v))?;
                            slot[t]
                        }
                        _ => {
                            let n = build(b, nodes, slot, target)?;
                            nodes.push(n);
                            nodes.len() - 1
                        }
                    };
                    out.insert(l.clone(), id);
                }
                Node::Choice {
                    head: CommHead {
                        from: from.clone(),
                        to: to.clone(),
                    },
                    branches: out,
                }
            }
        })
    }

    for &v in &productive {
        let n = build(&eqs[&v], &mut nodes, &slot, &target)?;
        nodes[slot[&v]] = n;
    }
    if nodes.is_empty() {
        nodes.push(Node::End);
    }
    let vars: Vec<TypeVar> = eqs.keys().copied().collect();
    let roots: Vec<NodeId> = vars.iter().map(|v| slot[&target[v]]).collect();
    let (graph, mapped) = GlobalGraph::from_raw_unminimized(nodes, 0).minimize_roots(&roots);
    Ok((graph, vars.into_iter().zip(mapped).collect()))
}

/// The least solution of `x ⊇ rhs(x) ∪ lower(x)` for all equations, by
/// Kleene iteration. Equalities are not checked here.
pub fn solve_pset_equations(
    eqs: &PSetEqSystem,
    lower: &BTreeMap<PSetVar, ParticipantSet>,
) -> BTreeMap<PSetVar, ParticipantSet> {
    let mut env: BTreeMap<PSetVar, ParticipantSet> = eqs
        .keys()
        .map(|v| (*v, lower.get(v).cloned().unwrap_or_default()))
        .collect();
    loop {
        let mut changed = false;
        for (v, rhs) in eqs {
            let add = rhs.eval(&env);
            let cur = env
                .get_mut(v)
                .expect("every defined variable is initialised");
            let before = cur.len();
            cur.extend(add);
            changed |= cur.len() != before;
        }
        if !changed {
            return env;
        }
    }
}

/// Checks every condition under `theta`, returning the first that fails.
pub fn check_agreement(theta: &Substitution, conds: &[PCondition]) -> Result<(), PCondition> {
    for c in conds {
        let mut lhs = plays_at(&theta.graph, theta.types[&c.typevar]);
        lhs.extend(theta.psets[&c.psetvar].iter().cloned());
        lhs.remove(&c.p);
        lhs.remove(&c.q);
        if lhs != c.target {
            return Err(c.clone());
        }
    }
    Ok(())
}

/// Why an outcome has no solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum NoSolution {
    Types(SolveError),
    Unbounded(TypeVar),
    /// The least p-sets above the condition bounds break an equation.
    Equality(PSetVar),
    Agreement(PCondition),
}

pub(crate) fn solve(
    types: &TypeEqSystem,
    psets: &PSetEqSystem,
    conds: &[PCondition],
) -> Result<Substitution, NoSolution> {
    let (graph, tmap) = solve_type_equations(types).map_err(NoSolution::Types)?;
    let ok = bounded_nodes(&graph);
    if let Some((v, _)) = tmap.iter().find(|(_, &n)| !ok[n]) {
        return Err(NoSolution::Unbounded(*v));
    }
    let mut lower: BTreeMap<PSetVar, ParticipantSet> = BTreeMap::new();
    for c in conds {
        let plays = plays_at(&graph, tmap[&c.typevar]);
        lower
            .entry(c.psetvar)
            .or_default()
            .extend(c.target.difference(&plays).cloned());
    }
    let env = solve_pset_equations(psets, &lower);
    for (v, rhs) in psets {
        if rhs.eval(&env) != env[v] {
            return Err(NoSolution::Equality(*v));
        }
    }
    let theta = Substitution {
        graph,
        types: tmap,
        psets: env,
    };
    check_agreement(&theta, conds).map_err(NoSolution::Agreement)?;
    Ok(theta)
}

/// All solutions this strategy finds: at most one.
pub fn solutions(
    types: &TypeEqSystem,
    psets: &PSetEqSystem,
    conds: &[PCondition],
) -> Vec<Substitution> {
    match solve(types, psets, conds) {
        Ok(t) => vec![t],
        Err(NoSolution::Equality(v)) => {
            log::info!("p-set equation for {v} fails under the least bounded solution");
            Vec::new()
        }
        Err(_) => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::PSetPattern;
    use super::*;
    use crate::frontend::parse_global;
    use crate::terms::bisimilar;
    use crate::{MessageLabel, Participant};
    use std::collections::BTreeSet;

    fn set(xs: &[&str]) -> ParticipantSet {
        xs.iter().map(|x| Participant::new(x)).collect()
    }

    fn comm(p: &str, q: &str, bs: Vec<(&str, GlobalPattern)>) -> GlobalPattern {
        GlobalPattern::Comm {
            from: Participant::new(p),
            to: Participant::new(q),
            branches: bs
                .into_iter()
                .map(|(l, b)| (MessageLabel::new(l), b))
                .collect(),
        }
    }

    #[test]
    fn end_and_unguarded() {
        let (g, m) =
            solve_type_equations(&TypeEqSystem::from([(TypeVar(0), GlobalPattern::End)])).unwrap();
        assert!(g.is_end(m[&TypeVar(0)]));
        let loopy = TypeEqSystem::from([
            (TypeVar(0), GlobalPattern::Var(TypeVar(1))),
            (TypeVar(1), GlobalPattern::Var(TypeVar(0))),
        ]);
        assert!(matches!(
            solve_type_equations(&loopy),
            Err(SolveError::Unguarded(_))
        ));
    }

    #[test]
    fn unbounded_solution_is_filtered() {
        let types = TypeEqSystem::from([(
            TypeVar(0),
            comm(
                "p",
                "q",
                vec![
                    ("l1", comm("r", "s", vec![("l", GlobalPattern::End)])),
                    ("l2", GlobalPattern::Var(TypeVar(0))),
                ],
            ),
        )]);
        let psets = PSetEqSystem::from([(PSetVar(0), PSetPattern::default())]);
        let (g, m) = solve_type_equations(&types).unwrap();
        let expect = parse_global("G = p->q:{l1 . r->s:l, l2 . G}").unwrap();
        assert!(bisimilar(&g, m[&TypeVar(0)], &expect, expect.root()));
        assert!(solutions(&types, &psets, &[]).is_empty());
    }

    #[test]
    fn kleene_with_lower_bound() {
        let (x, y) = (PSetVar(0), PSetVar(1));
        let eqs = PSetEqSystem::from([
            (
                x,
                PSetPattern {
                    vars: BTreeSet::from([x]),
                    constants: set(&["a"]),
                },
            ),
            (y, PSetPattern::var(x)),
        ]);
        let env = solve_pset_equations(&eqs, &BTreeMap::from([(y, set(&["b"]))]));
        assert_eq!(env[&x], set(&["a"]));
        assert_eq!(env[&y], set(&["a", "b"]));
        assert_ne!(eqs[&y].eval(&env), env[&y]);
        let only = PSetEqSystem::from([(x, PSetPattern::default())]);
        assert_eq!(solve_pset_equations(&only, &BTreeMap::new())[&x], set(&[]));
    }

    #[test]
    fn agreement() {
        let g = parse_global("p->q:a").unwrap();
        let mut theta = Substitution {
            types: BTreeMap::from([(TypeVar(0), g.root())]),
            graph: g,
            psets: BTreeMap::from([(PSetVar(0), set(&[]))]),
        };
        let c = PCondition {
            typevar: TypeVar(0),
            psetvar: PSetVar(0),
            p: Participant::new("p"),
            q: Participant::new("q"),
            target: set(&[]),
        };
        assert!(check_agreement(&theta, std::slice::from_ref(&c)).is_ok());
        theta.psets.insert(PSetVar(0), set(&["r"]));
        assert_eq!(check_agreement(&theta, std::slice::from_ref(&c)), Err(c));
    }
}
