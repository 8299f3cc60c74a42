//! Partial multiparty session types.
//!
//! Sessions and global types are regular (possibly infinite) terms stored as
//! finite graphs. On top of them the crate provides:
//!
//! * the synchronous LTS of sessions and the LTS of global types ([`semantics`]);
//! * depth, boundedness and `P`-excluded lock/deadlock-freedom ([`analysis`]);
//! * a checker for the judgment `G ⊢_P M` producing derivations ([`typing`]);
//! * inference of global types and ignored-participant sets through regular
//!   systems of equations ([`inference`]);
//! * a small textual format for all of the above ([`frontend`]).

pub mod analysis;
pub mod cli;
pub mod frontend;
pub mod inference;
pub mod json;
pub mod metatheory;
pub mod random;
pub mod semantics;
pub mod terms;
pub mod typing;

pub use frontend::{parse, SpecFile};
pub use terms::{
    CommHead, Direction, GlobalGraph, MessageLabel, Participant, ProcessEnv, ProcessGraph,
    ProcessHead, Session,
};

use std::collections::BTreeSet;

/// A set of participants, ordered so that printing and iteration are stable.
pub type ParticipantSet = BTreeSet<Participant>;
