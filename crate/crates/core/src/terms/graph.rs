use super::{MessageLabel, Participant, TermError};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

pub type NodeId = usize;

/// The data carried by a non-terminal node, besides its branches.
pub trait Head: Clone + Ord + Hash + Debug {
    fn validate(&self) -> Result<(), TermError> {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Direction {
    Send,
    Receive,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Send => '!',
            Direction::Receive => '?',
        }
    }
}

/// `peer!{...}` or `peer?{...}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessHead {
    pub dir: Direction,
    pub peer: Participant,
}

impl Head for ProcessHead {}

/// `from->to:{...}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommHead {
    pub from: Participant,
    pub to: Participant,
}

impl Head for CommHead {
    fn validate(&self) -> Result<(), TermError> {
        if self.from == self.to {
            Err(TermError::SelfCommunication(self.from.to_string()))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node<H> {
    End,
    Choice {
        head: H,
        branches: BTreeMap<MessageLabel, NodeId>,
    },
}

impl<H> Node<H> {
    pub fn is_end(&self) -> bool {
        matches!(self, Node::End)
    }

    pub fn head(&self) -> Option<&H> {
        match self {
            Node::End => None,
            Node::Choice { head, .. } => Some(head),
        }
    }

    pub fn branches(&self) -> Option<&BTreeMap<MessageLabel, NodeId>> {
        match self {
            Node::End => None,
            Node::Choice { branches, .. } => Some(branches),
        }
    }

    fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.branches()
            .into_iter()
            .flat_map(|b| b.values().copied())
    }
}

/// A finite rooted graph denoting a regular tree.
///
/// Values built through [`Graph::from_nodes`], [`build_system`] or any of the
/// minimizing operations are canonical: equal trees give equal graphs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph<H> {
    nodes: Vec<Node<H>>,
    root: NodeId,
}

pub type ProcessGraph = Graph<ProcessHead>;
pub type GlobalGraph = Graph<CommHead>;

impl<H: Head> Graph<H> {
    pub fn end() -> Self {
        Graph {
            nodes: vec![Node::End],
            root: 0,
        }
    }

    /// Validates a raw node table and returns its canonical form.
    pub fn from_nodes(nodes: Vec<Node<H>>, root: NodeId) -> Result<Self, TermError> {
        validate_nodes(&nodes, "<graph>")?;
        if root >= nodes.len() {
            return Err(TermError::UndefinedName(format!("node {root}")));
        }
        Ok(Graph { nodes, root }.minimize())
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node<H> {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node<H>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_end(&self, id: NodeId) -> bool {
        self.nodes[id].is_end()
    }

    /// Nodes reachable from `from`, in breadth-first order.
    pub fn reachable(&self, from: NodeId) -> Vec<NodeId> {
        bfs(&self.nodes, &[from])
    }

    /// The bisimulation-minimal canonical graph for the root.
    pub fn minimize(&self) -> Self {
        self.minimize_roots(&[self.root]).0
    }

    /// Minimizes the part of the graph reachable from `roots` and returns
    /// the new positions of the roots. The first root becomes the graph root.
    pub fn minimize_roots(&self, roots: &[NodeId]) -> (Self, Vec<NodeId>) {
        let live = bfs(&self.nodes, roots);
        let class = refine(&self.nodes, &live);

        // canonical numbering: breadth first over classes
        let mut number: HashMap<usize, NodeId> = HashMap::new();
        let mut order: Vec<NodeId> = Vec::new();
        let mut queue = VecDeque::new();
        for &r in roots {
            let c = class[&r];
            if let std::collections::hash_map::Entry::Vacant(e) = number.entry(c) {
                e.insert(order.len());
                order.push(r);
                queue.push_back(r);
            }
        }
        while let Some(n) = queue.pop_front() {
            for child in self.nodes[n].children() {
                let c = class[&child];
                if let std::collections::hash_map::Entry::Vacant(e) = number.entry(c) {
                    e.insert(order.len());
                    order.push(child);
                    queue.push_back(child);
                }
            }
        }
        let nodes = order
            .iter()
            .map(|&n| match &self.nodes[n] {
                Node::End => Node::End,
                Node::Choice { head, branches } => Node::Choice {
                    head: head.clone(),
                    branches: branches
                        .iter()
                        .map(|(l, c)| (l.clone(), number[&class[c]]))
                        .collect(),
                },
            })
            .collect();
        let mapped: Vec<NodeId> = roots.iter().map(|r| number[&class[r]]).collect();
        let root = mapped.first().copied().unwrap_or(0);
        (Graph { nodes, root }, mapped)
    }

    /// The canonical graph of the subterm at `node`.
    pub fn subgraph(&self, node: NodeId) -> Self {
        self.minimize_roots(&[node]).0
    }

    /// Appends the nodes of `other` and returns the offset of its node ids.
    /// The result is not minimized.
    pub(crate) fn disjoint_union(&self, other: &Self) -> (Self, usize) {
        let offset = self.nodes.len();
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().map(|n| shift(n, offset)));
        (
            Graph {
                nodes,
                root: self.root,
            },
            offset,
        )
    }

    /// Raw constructor used by internal algorithms that produce graphs node
    /// by node. The caller guarantees validity; the result is minimized.
    pub(crate) fn from_raw(nodes: Vec<Node<H>>, root: NodeId) -> Self {
        debug_assert!(validate_nodes(&nodes, "<raw>").is_ok());
        Graph { nodes, root }.minimize()
    }

    /// Like [`Graph::from_raw`] but keeps the node numbering, for callers
    /// that minimize several roots at once.
    pub(crate) fn from_raw_unminimized(nodes: Vec<Node<H>>, root: NodeId) -> Self {
        debug_assert!(validate_nodes(&nodes, "<raw>").is_ok());
        Graph { nodes, root }
    }
}

fn shift<H: Clone>(node: &Node<H>, offset: usize) -> Node<H> {
    match node {
        Node::End => Node::End,
        Node::Choice { head, branches } => Node::Choice {
            head: head.clone(),
            branches: branches
                .iter()
                .map(|(l, c)| (l.clone(), c + offset))
                .collect(),
        },
    }
}

fn validate_nodes<H: Head>(nodes: &[Node<H>], name: &str) -> Result<(), TermError> {
    for node in nodes {
        if let Node::Choice { head, branches } = node {
            head.validate()?;
            if branches.is_empty() {
                return Err(TermError::EmptyChoice(name.to_string()));
            }
            if branches.values().any(|&c| c >= nodes.len()) {
                return Err(TermError::UndefinedName(format!("node in {name}")));
            }
        }
    }
    Ok(())
}

fn bfs<H>(nodes: &[Node<H>], roots: &[NodeId]) -> Vec<NodeId> {
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for &r in roots {
        if seen.insert(r) {
            order.push(r);
            queue.push_back(r);
        }
    }
    while let Some(n) = queue.pop_front() {
        for c in nodes[n].children() {
            if seen.insert(c) {
                order.push(c);
                queue.push_back(c);
            }
        }
    }
    order
}

/// Coarsest partition of `live` compatible with heads, label sets and
/// successors. Returns node -> class.
fn refine<H: Head>(nodes: &[Node<H>], live: &[NodeId]) -> HashMap<NodeId, usize> {
    let mut initial: HashMap<(Option<&H>, Vec<&MessageLabel>), usize> = HashMap::new();
    let mut class: HashMap<NodeId, usize> = HashMap::new();
    for &n in live {
        let key = match &nodes[n] {
            Node::End => (None, Vec::new()),
            Node::Choice { head, branches } => (Some(head), branches.keys().collect()),
        };
        let next = initial.len();
        let c = *initial.entry(key).or_insert(next);
        class.insert(n, c);
    }
    let mut count = initial.len();
    loop {
        let mut sigs: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next_class = HashMap::with_capacity(class.len());
        for &n in live {
            let succ: Vec<usize> = nodes[n].children().map(|c| class[&c]).collect();
            let next = sigs.len();
            let c = *sigs.entry((class[&n], succ)).or_insert(next);
            next_class.insert(n, c);
        }
        class = next_class;
        if sigs.len() == count {
            return class;
        }
        count = sigs.len();
    }
}

/// Decides whether node `a` of `ga` and node `b` of `gb` denote the same tree.
pub fn bisimilar<H: Head>(ga: &Graph<H>, a: NodeId, gb: &Graph<H>, b: NodeId) -> bool {
    let (union, offset) = ga.disjoint_union(gb);
    let live = bfs(&union.nodes, &[a, b + offset]);
    let class = refine(&union.nodes, &live);
    class[&a] == class[&(b + offset)]
}

// ---------------------------------------------------------------------------
// Equation systems

/// Right-hand side of a named equation `Name = term`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term<H> {
    End,
    Ref(String),
    Choice {
        head: H,
        branches: Vec<(MessageLabel, Term<H>)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation<H> {
    pub name: String,
    pub body: Term<H>,
}

pub type ProcessTerm = Term<ProcessHead>;
pub type GlobalTerm = Term<CommHead>;
pub type ProcessEquation = Equation<ProcessHead>;
pub type GlobalEquation = Equation<CommHead>;

/// The graph of a whole system of equations, plus where each name landed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System<H> {
    pub graph: Graph<H>,
    pub entries: Vec<(String, NodeId)>,
}

impl<H> System<H> {
    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, id)| id)
    }
}

/// Builds one canonical graph for a system of (mutually) recursive equations.
/// The graph root is the first equation.
pub fn build_system<H: Head>(equations: &[Equation<H>]) -> Result<System<H>, TermError> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, eq) in equations.iter().enumerate() {
        if index.insert(eq.name.as_str(), i).is_some() {
            return Err(TermError::DuplicateDefinition(eq.name.clone()));
        }
    }

    // Resolve `A = B` aliases down to an equation with a guarded body.
    let mut target: Vec<usize> = Vec::with_capacity(equations.len());
    for (i, eq) in equations.iter().enumerate() {
        let mut cur = i;
        let mut seen = HashSet::from([i]);
        while let Term::Ref(next) = &equations[cur].body {
            cur = *index
                .get(next.as_str())
                .ok_or_else(|| TermError::UndefinedName(next.clone()))?;
            if !seen.insert(cur) {
                return Err(TermError::UnguardedRecursion(eq.name.clone()));
            }
        }
        target.push(cur);
    }

    let mut nodes: Vec<Node<H>> = Vec::new();
    let mut top: Vec<Option<NodeId>> = vec![None; equations.len()];
    for (i, eq) in equations.iter().enumerate() {
        if target[i] == i {
            top[i] = Some(nodes.len());
            nodes.push(Node::End);
            let _ = eq;
        }
    }

    let mut builder = Builder {
        equations,
        index: &index,
        target: &target,
        top: &top,
        nodes,
    };
    for (i, eq) in equations.iter().enumerate() {
        if target[i] != i {
            continue;
        }
        let id = top[i].expect("guarded equation has a node");
        if let Term::Choice { head, branches } = &eq.body {
            let node = builder.choice(&eq.name, head, branches)?;
            builder.nodes[id] = node;
        }
    }
    let nodes = builder.nodes;

    let roots: Vec<NodeId> = (0..equations.len())
        .map(|i| top[target[i]].expect("resolved"))
        .collect();
    if roots.is_empty() {
        return Ok(System {
            graph: Graph::end(),
            entries: Vec::new(),
        });
    }
    let (graph, mapped) = Graph {
        nodes,
        root: roots[0],
    }
    .minimize_roots(&roots);
    let entries = equations
        .iter()
        .zip(mapped)
        .map(|(eq, id)| (eq.name.clone(), id))
        .collect();
    Ok(System { graph, entries })
}

struct Builder<'a, H> {
    equations: &'a [Equation<H>],
    index: &'a HashMap<&'a str, usize>,
    target: &'a [usize],
    top: &'a [Option<NodeId>],
    nodes: Vec<Node<H>>,
}

impl<H: Head> Builder<'_, H> {
    fn term(&mut self, definition: &str, term: &Term<H>) -> Result<NodeId, TermError> {
        match term {
            Term::End => {
                self.nodes.push(Node::End);
                Ok(self.nodes.len() - 1)
            }
            Term::Ref(name) => {
                let i = *self
                    .index
                    .get(name.as_str())
                    .ok_or_else(|| TermError::UndefinedName(name.clone()))?;
                Ok(self.top[self.target[i]].expect("resolved"))
            }
            Term::Choice { head, branches } => {
                let id = self.nodes.len();
                self.nodes.push(Node::End);
                let node = self.choice(definition, head, branches)?;
                self.nodes[id] = node;
                Ok(id)
            }
        }
    }

    fn choice(
        &mut self,
        definition: &str,
        head: &H,
        branches: &[(MessageLabel, Term<H>)],
    ) -> Result<Node<H>, TermError> {
        head.validate()?;
        if branches.is_empty() {
            return Err(TermError::EmptyChoice(definition.to_string()));
        }
        let mut map = BTreeMap::new();
        for (label, cont) in branches {
            if map.contains_key(label) {
                return Err(TermError::DuplicateBranchLabel {
                    definition: definition.to_string(),
                    label: label.to_string(),
                });
            }
            let child = self.term(definition, cont)?;
            map.insert(label.clone(), child);
        }
        let _ = self.equations;
        Ok(Node::Choice {
            head: head.clone(),
            branches: map,
        })
    }
}
