//! The `.mpst` text format.
//!
//! ```text
//! # comments run to end of line
//! process P = q?hello . u!req . u?{ dnd . P, grtd . q!hello }
//! session M = p: P | q: Q | u: U
//! global  G = q->p:hello . G1
//! ignored I = { u }
//! ```
//!
//! A missing continuation means `0` (processes) or `end` (global types).
//! Recursion goes through named equations only.

mod lexer;
mod parser;
mod printer;

pub use printer::{print_global, print_global_named, print_process, print_session, print_spec};

use crate::terms::{CommHead, GlobalGraph, NodeId, ProcessEnv, Session, System, TermError};
use crate::{Participant, ParticipantSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A diagnostic with its source position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError {
            pos,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    pub(crate) fn term(pos: Pos, err: TermError) -> Self {
        ParseError {
            pos,
            kind: ParseErrorKind::Term(err),
        }
    }
}

/// A name that a [`SpecFile`] cannot resolve.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("no global type named `{0}`")]
    Global(String),
    #[error("no session named `{0}`")]
    Session(String),
    #[error("`{0}` is neither an ignored set nor a participant")]
    Ignored(String),
}

/// Everything defined in one `.mpst` file, resolved.
#[derive(Clone, Debug)]
pub struct SpecFile {
    /// All process definitions share this arena.
    pub processes: Arc<ProcessEnv>,
    pub process_defs: Vec<(String, NodeId)>,
    pub sessions: Vec<(String, Session)>,
    pub globals: System<CommHead>,
    pub ignored_sets: Vec<(String, ParticipantSet)>,
}

impl SpecFile {
    pub fn session(&self, name: &str) -> Option<&Session> {
        self.sessions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    /// The global type `name` as a standalone canonical graph.
    pub fn global(&self, name: &str) -> Option<GlobalGraph> {
        self.globals
            .get(name)
            .map(|n| self.globals.graph.subgraph(n))
    }

    pub fn global_names(&self) -> impl Iterator<Item = &str> {
        self.globals.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn ignored(&self, name: &str) -> Option<&ParticipantSet> {
        self.ignored_sets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    /// Like [`SpecFile::global`], with `End` as a built-in name.
    pub fn resolve_global(&self, name: &str) -> Result<GlobalGraph, LookupError> {
        match self.global(name) {
            Some(g) => Ok(g),
            None if name == "End" => Ok(GlobalGraph::end()),
            None => Err(LookupError::Global(name.into())),
        }
    }

    /// Like [`SpecFile::session`], with `Empty` as a built-in name.
    pub fn resolve_session(&self, name: &str) -> Result<Session, LookupError> {
        match self.session(name) {
            Some(s) => Ok(s.clone()),
            None if name == "Empty" => Ok(Session::empty(self.processes.clone())),
            None => Err(LookupError::Session(name.into())),
        }
    }

    /// A named ignored set, or else a comma-separated list of participants
    /// (empty text is the empty set).
    pub fn resolve_ignored(&self, text: &str) -> Result<ParticipantSet, LookupError> {
        if let Some(set) = self.ignored(text) {
            return Ok(set.clone());
        }
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Participant::try_new(s).map_err(|_| LookupError::Ignored(s.into())))
            .collect()
    }

    pub fn process(&self, name: &str) -> Option<NodeId> {
        self.process_defs
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, id)| id)
    }
}

pub fn parse(text: &str) -> Result<SpecFile, ParseError> {
    parser::parse(text)
}

/// Parses the output of [`print_global`]: a bare global term or a list of
/// `Name = term` equations whose first equation is the root.
pub fn parse_global(text: &str) -> Result<GlobalGraph, ParseError> {
    parser::parse_global(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{Direction, Node};
    use crate::MessageLabel;

    #[test]
    fn social_media_user_loop() {
        let spec = parse("process U = p?req . p!{ dnd . q!dnd . U, grtd . q!grtd . U }").unwrap();
        let env = &spec.processes;
        let u = spec.process("U").unwrap();
        let Node::Choice { head, branches } = env.node(u) else {
            panic!("expected input")
        };
        assert_eq!(head.dir, Direction::Receive);
        let out = branches[&MessageLabel::new("req")];
        let Node::Choice { head, branches } = env.node(out) else {
            panic!("expected output")
        };
        assert_eq!(head.dir, Direction::Send);
        for l in ["dnd", "grtd"] {
            let n = branches[&MessageLabel::new(l)];
            let next = env.node(n).branches().unwrap().values().next().copied();
            assert_eq!(next, Some(u));
        }
    }

    #[test]
    fn buyer_seller_global_loop() {
        let spec = parse("global G = b->s:{ add . G, pay . end }").unwrap();
        let g = spec.global("G").unwrap();
        let b = g.node(g.root()).branches().unwrap();
        assert_eq!(b[&MessageLabel::new("add")], g.root());
        assert!(g.is_end(b[&MessageLabel::new("pay")]));
    }

    #[test]
    fn repeated_participant_is_rejected() {
        let err = parse("process P = q!a\nprocess Q = p?a\nsession M = p: P | p: Q").unwrap_err();
        assert_eq!(err.pos.line, 3);
        assert!(matches!(
            err.kind,
            ParseErrorKind::Term(TermError::DuplicateDefinition(_))
        ));
    }

    #[test]
    fn print_global_matches_named_equations() {
        let spec = parse(
            "global G = q->p:hello . p->u:req . u->p:{dnd . u->q:dnd . G, \
             grtd . u->q:grtd . p->q:hello}",
        )
        .unwrap();
        let g = spec.global("G").unwrap();
        let text = print_global(&g);
        assert_eq!(
            text,
            "G = q->p:hello . G1\n\
             G1 = p->u:req . G2\n\
             G2 = u->p:{dnd . G3, grtd . G4}\n\
             G3 = u->q:dnd . G\n\
             G4 = u->q:grtd . G5\n\
             G5 = p->q:hello\n"
        );
        assert_eq!(parse_global(&text).unwrap(), g);
        assert_eq!(print_global(&crate::GlobalGraph::end()), "end");
        let single = parse_global("p->q:hello . end").unwrap();
        assert_eq!(print_global(&single), "G = p->q:hello\n");
        assert_eq!(parse_global(&print_global(&single)).unwrap(), single);
    }

    #[test]
    fn diagnostics_have_positions() {
        let err = parse("process P = q!{a, a}").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 1 });
        let err = parse("process P = q!a .").unwrap_err();
        assert_eq!(err.pos.line, 1);
        assert_eq!(err.pos.col, 18);
        let err = parse("session M = p: Nope").unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::Term(TermError::UndefinedName(_))
        ));
        let err = parse("global G = end\nglobal G = end").unwrap_err();
        assert_eq!(err.pos.line, 2);
    }
}
