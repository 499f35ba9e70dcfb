//! Merger generation.
//!
//! A merger of jointly refluent canonical sets is a maximal canonical subset
//! of their union; equivalently a maximal conflict-free subset. Three
//! generators live here:
//!
//! * [`greedy_merger`]: one top-down pass with lazy downward conflict flags.
//! * [`merger_extending`]: the same pass preceded by a sweep deleting every
//!   command in conflict with a forced subset.
//! * [`generate_merger`]: four alternating passes resolving file-input,
//!   parent/child, empty-input and directory-input conflicts in turn; can
//!   reach every merger through its decision oracle.
//!
//! [`enumerate_mergers`] is the quadratic reference: maximal independent sets
//! of the explicit conflict graph.

mod enumerate;
mod generate;
mod greedy;
mod oracle;
mod union;

use std::fmt;

use thiserror::Error;

use crate::canonical::{CanonicalSet, NotCanonical};
use crate::command::{Command, ReplicaId};
use crate::refluence::NotRefluent;

pub use enumerate::{enumerate_mergers, ConflictGraph};
pub use generate::{
    explore_generated_mergers, generate_merger, generate_merger_on, generate_merger_with, Candidate, ConflictClass,
    DecisionObserver, DecisionPoint,
};
pub use greedy::{greedy_merger, greedy_merger_on, greedy_merger_with, merger_extending, merger_extending_on};
pub use oracle::DecisionOracle;
pub use union::{sorted_union, Provenance, UnionCommand, UnionIndex, WorkCounters};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error(transparent)]
    NotRefluent(#[from] NotRefluent),
    #[error("NotCanonicalSubset: {0}")]
    NotCanonicalSubset(String),
    #[error("ScriptExhausted: no choice supplied for decision #{decision}")]
    ScriptExhausted { decision: usize },
    #[error("ScriptOutOfRange: choice {choice} at decision #{decision} has only {candidates} candidates")]
    ScriptOutOfRange { decision: usize, choice: usize, candidates: usize },
    #[error("ScriptTooLong: {supplied} choices supplied but only {used} decisions were made")]
    ScriptTooLong { used: usize, supplied: usize },
}

impl From<NotCanonical> for MergeError {
    fn from(e: NotCanonical) -> Self {
        MergeError::NotCanonicalSubset(e.to_string())
    }
}

/// A merger together with the replicas each of its commands came from.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Merger {
    commands: CanonicalSet,
    provenance: Vec<Provenance>,
}

impl Merger {
    /// Assembles a merger from union entries in path order; the entries
    /// must form a canonical set.
    pub(crate) fn from_union<'a>(kept: impl IntoIterator<Item = &'a UnionCommand, IntoIter: Clone>) -> Self {
        let kept = kept.into_iter();
        let len = kept.clone().count();
        let mut cmds = Vec::with_capacity(len);
        let mut provenance = Vec::with_capacity(len);
        for u in kept {
            cmds.push(u.cmd.clone().with_origin(u.provenance[0]));
            provenance.push(Provenance::from_slice(&u.provenance));
        }
        Merger { commands: CanonicalSet::from_sorted(cmds), provenance }
    }

    /// Wraps a canonical set with provenance looked up in `sets`.
    pub fn from_set(commands: CanonicalSet, sets: &[CanonicalSet]) -> Self {
        let provenance = commands
            .iter()
            .map(|c| {
                (0..sets.len() as ReplicaId)
                    .filter(|&i| sets[i as usize].contains(c))
                    .collect()
            })
            .collect();
        Merger { commands, provenance }
    }

    pub fn commands(&self) -> &CanonicalSet {
        &self.commands
    }

    pub fn into_set(self) -> CanonicalSet {
        self.commands
    }

    /// Contributing replicas, aligned with [`Merger::commands`].
    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn contains(&self, cmd: &Command) -> bool {
        self.commands.contains(cmd)
    }
}

impl fmt::Debug for Merger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.commands, f)
    }
}

/// Whether `candidate` is a maximal conflict-free subset of the union of
/// `sets`. Quadratic; meant for validation of small inputs.
pub fn is_merger_brute_force(candidate: &[Command], sets: &[CanonicalSet]) -> bool {
    use crate::command::conflicts;
    let union: Vec<&Command> = sets.iter().flat_map(|s| s.iter()).collect();
    if !candidate.iter().all(|c| union.contains(&c)) {
        return false;
    }
    let conflict_free =
        candidate.iter().enumerate().all(|(i, a)| candidate[i + 1..].iter().all(|b| !conflicts(a, b)));
    conflict_free
        && union
            .iter()
            .filter(|c| !candidate.contains(c))
            .all(|c| candidate.iter().any(|m| conflicts(c, m)))
}
