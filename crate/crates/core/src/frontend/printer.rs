use super::SpecFile;
use crate::terms::{GlobalGraph, Node, NodeId, ProcessEnv, Session};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

/// Prints a global type as one equation per communication node, named `G`,
/// `G1`, `G2`, ... in canonical node order. A terminated type prints as `end`.
pub fn print_global(g: &GlobalGraph) -> String {
    print_global_named(g, "G")
}

pub fn print_global_named(g: &GlobalGraph, base: &str) -> String {
    let g = g.minimize();
    if g.is_end(g.root()) {
        return "end".to_string();
    }
    let name = |id: NodeId| {
        if id == g.root() {
            base.to_string()
        } else {
            format!("{base}{id}")
        }
    };
    let mut out = String::new();
    for id in g.reachable(g.root()) {
        if !g.is_end(id) {
            let _ = writeln!(out, "{} = {}", name(id), global_body(&g, id, &name));
        }
    }
    out
}

fn global_body(g: &GlobalGraph, id: NodeId, name: &dyn Fn(NodeId) -> String) -> String {
    let Node::Choice { head, branches } = g.node(id) else {
        return "end".to_string();
    };
    let parts: Vec<String> = branches
        .iter()
        .map(|(l, &c)| {
            if g.is_end(c) {
                l.to_string()
            } else {
                format!("{l} . {}", name(c))
            }
        })
        .collect();
    if parts.len() == 1 {
        format!("{}->{}:{}", head.from, head.to, parts[0])
    } else {
        format!("{}->{}:{{{}}}", head.from, head.to, parts.join(", "))
    }
}

fn fresh(taken: &BTreeSet<String>, prefix: &str, id: NodeId) -> String {
    let mut name = format!("{prefix}{id}");
    while taken.contains(&name) {
        name.insert(0, '_');
    }
    name
}

/// Names for every node of `env` that closes a cycle reachable from `roots`
/// and has no definition name yet.
fn cycle_names(
    env: &ProcessEnv,
    roots: &[NodeId],
    reserved: &BTreeSet<String>,
) -> BTreeMap<NodeId, String> {
    let mut names = env.names.clone();
    let mut state: BTreeMap<NodeId, bool> = BTreeMap::new(); // true = on stack
    fn dfs(
        env: &ProcessEnv,
        n: NodeId,
        state: &mut BTreeMap<NodeId, bool>,
        names: &mut BTreeMap<NodeId, String>,
        reserved: &BTreeSet<String>,
    ) {
        state.insert(n, true);
        if let Some(b) = env.graph.node(n).branches() {
            for &c in b.values() {
                match state.get(&c) {
                    Some(true) => {
                        if !names.contains_key(&c) {
                            let taken: BTreeSet<String> =
                                names.values().chain(reserved).cloned().collect();
                            names.insert(c, fresh(&taken, "_p", c));
                        }
                    }
                    Some(false) => {}
                    None => dfs(env, c, state, names, reserved),
                }
            }
        }
        state.insert(n, false);
    }
    for &r in roots {
        if !state.contains_key(&r) {
            dfs(env, r, &mut state, &mut names, reserved);
        }
    }
    names
}

pub fn print_process(env: &ProcessEnv, node: NodeId) -> String {
    env.render(node)
}

/// Prints a session together with the process equations it needs, as a
/// self-contained `.mpst` fragment defining `session <name>`.
pub fn print_session(s: &Session, name: &str) -> String {
    let roots: Vec<NodeId> = s.active().map(|(_, n)| n).collect();
    let env = s.env();
    let names = cycle_names(env, &roots, &BTreeSet::new());
    let named = ProcessEnv::new(env.graph.clone(), names.clone());
    let mut out = String::new();
    let mut needed: BTreeSet<NodeId> = BTreeSet::new();
    for &r in &roots {
        for n in env.graph.reachable(r) {
            if names.contains_key(&n) {
                needed.insert(n);
            }
        }
    }
    for n in needed {
        let _ = writeln!(out, "process {} = {}", names[&n], named.render(n));
    }
    let _ = write!(out, "session {name} = ");
    if s.is_null() {
        out.push('0');
    }
    for (i, (p, n)) in s.active().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        let body = match names.get(&n) {
            Some(x) => x.clone(),
            None => named.render(n),
        };
        let _ = write!(out, "{p}: {body}");
    }
    out.push('\n');
    out
}

/// Prints a whole spec file. Reparsing yields bisimilar definitions.
pub fn print_spec(spec: &SpecFile) -> String {
    let env = &spec.processes;
    let mut out = String::new();
    let mut roots: Vec<NodeId> = spec.process_defs.iter().map(|(_, n)| *n).collect();
    for (_, s) in &spec.sessions {
        roots.extend(s.active().map(|(_, n)| n));
    }
    let reserved: BTreeSet<String> = spec
        .globals
        .entries
        .iter()
        .map(|(n, _)| n.clone())
        .chain(spec.sessions.iter().map(|(n, _)| n.clone()))
        .chain(spec.ignored_sets.iter().map(|(n, _)| n.clone()))
        .collect();
    let names = cycle_names(env, &roots, &reserved);
    let named = ProcessEnv::new(env.graph.clone(), names.clone());
    let mut printed = BTreeSet::new();
    for (name, n) in &spec.process_defs {
        printed.insert(name.clone());
        let body = match names.get(n) {
            Some(canon) if canon != name => canon.clone(),
            _ => named.render(*n),
        };
        let _ = writeln!(out, "process {name} = {body}");
    }
    for (n, name) in &names {
        if !printed.contains(name) {
            let _ = writeln!(out, "process {name} = {}", named.render(*n));
        }
    }
    for (name, s) in &spec.sessions {
        let _ = write!(out, "session {name} = ");
        if s.is_null() {
            out.push('0');
        }
        for (i, (p, n)) in s.active().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            let body = match names.get(&n) {
                Some(x) => x.clone(),
                None => named.render(n),
            };
            let _ = write!(out, "{p}: {body}");
        }
        out.push('\n');
    }
    let g = &spec.globals.graph;
    let mut gnames: BTreeMap<NodeId, String> = BTreeMap::new();
    for (name, n) in &spec.globals.entries {
        gnames.entry(*n).or_insert_with(|| name.clone());
    }
    let taken: BTreeSet<String> = reserved.iter().chain(names.values()).cloned().collect();
    let mut generated = BTreeSet::new();
    for id in 0..g.len() {
        if !g.is_end(id) && !gnames.contains_key(&id) {
            gnames.insert(id, fresh(&taken, "_g", id));
            generated.insert(id);
        }
    }
    let gname = |id: NodeId| gnames[&id].clone();
    for (name, n) in &spec.globals.entries {
        if g.is_end(*n) {
            let _ = writeln!(out, "global {name} = end");
        } else if gnames[n] != *name {
            let _ = writeln!(out, "global {name} = {}", gname(*n));
        } else {
            let _ = writeln!(out, "global {name} = {}", global_body(g, *n, &gname));
        }
    }
    for id in generated {
        let _ = writeln!(out, "global {} = {}", gname(id), global_body(g, id, &gname));
    }
    for (name, set) in &spec.ignored_sets {
        let items: Vec<String> = set.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "ignored {name} = {{{}}}", items.join(", "));
    }
    out
}
