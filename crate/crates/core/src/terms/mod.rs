//! Regular terms: processes, sessions and global types.
//!
//! Every term is a finite rooted graph. Graphs are kept in a canonical form
//! (bisimulation-minimal, nodes numbered breadth-first from the roots with
//! branches visited in label order), so two single-rooted graphs denote the
//! same infinite tree exactly when they are equal as values.

mod graph;
mod session;

pub use graph::{
    bisimilar, build_system, CommHead, Direction, Equation, GlobalEquation, GlobalGraph,
    GlobalTerm, Graph, Head, Node, NodeId, ProcessEquation, ProcessGraph, ProcessHead, ProcessTerm,
    System, Term,
};
pub use session::{normalize_session, participants, sessions_equivalent, ProcessEnv, Session};

use serde::Serialize;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Errors raised while building terms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("undefined name `{0}`")]
    UndefinedName(String),
    #[error("unguarded recursion through `{0}`")]
    UnguardedRecursion(String),
    #[error("duplicate branch label `{label}` in `{definition}`")]
    DuplicateBranchLabel { definition: String, label: String },
    #[error("empty choice in `{0}`")]
    EmptyChoice(String),
    #[error("duplicate definition of `{0}`")]
    DuplicateDefinition(String),
    #[error("participant `{0}` bound twice in one session")]
    DuplicateParticipant(String),
    #[error("participant `{0}` communicates with itself")]
    SelfCommunication(String),
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

macro_rules! atom {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        #[serde(transparent)]
        pub struct $name(Arc<str>);

        impl $name {
            /// Builds the atom, panicking on a malformed identifier.
            pub fn new(name: &str) -> Self {
                Self::try_new(name).unwrap_or_else(|e| panic!("{e}"))
            }

            pub fn try_new(name: &str) -> Result<Self, TermError> {
                if is_identifier(name) {
                    Ok(Self(Arc::from(name)))
                } else {
                    Err(TermError::InvalidIdentifier(name.to_string()))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = TermError;

            fn from_str(s: &str) -> Result<Self, TermError> {
                Self::try_new(s)
            }
        }
    };
}

atom!(
    /// A session participant (`p`, `q`, `u`, ...).
    Participant
);
atom!(
    /// A message label (`hello`, `req`, ...).
    MessageLabel
);
