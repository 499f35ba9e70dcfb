//! Update detection, per-replica synchronization plans and late merges.

use std::cmp::Ordering;

use thiserror::Error;

use crate::canonical::{check_canonical, order_canonical, CanonicalSet};
use crate::command::{Command, CommandSequence};
use crate::fsmodel::{Filesystem, Value};
use crate::merge::{merger_extending, MergeError, Merger, UnionIndex};
use crate::refluence::NotRefluent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconcileError {
    #[error(transparent)]
    NotRefluent(#[from] NotRefluent),
    #[error("NotAMerger: {0}")]
    NotAMerger(String),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

/// The canonical set taking `from` to `to`: one command per node whose value
/// differs.
pub fn diff(from: &Filesystem, to: &Filesystem) -> CanonicalSet {
    let mut out = Vec::new();
    let mut a = from.entries().peekable();
    let mut b = to.entries().peekable();
    loop {
        let cmd = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(&(p, v)), None) => {
                a.next();
                Command::new(p.clone(), v.clone(), Value::Empty)
            }
            (None, Some(&(p, v))) => {
                b.next();
                Command::new(p.clone(), Value::Empty, v.clone())
            }
            (Some(&(pa, va)), Some(&(pb, vb))) => match pa.cmp(pb) {
                Ordering::Less => {
                    a.next();
                    Command::new(pa.clone(), va.clone(), Value::Empty)
                }
                Ordering::Greater => {
                    b.next();
                    Command::new(pb.clone(), Value::Empty, vb.clone())
                }
                Ordering::Equal => {
                    a.next();
                    b.next();
                    if va == vb {
                        continue;
                    }
                    Command::new(pa.clone(), va.clone(), vb.clone())
                }
            },
        };
        out.push(cmd);
    }
    CanonicalSet::from_trusted(out)
}

/// What one replica has to do to reach the merged state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaPlan {
    /// Undoes the replica's commands that did not make it into the merger.
    pub rollback: CommandSequence,
    /// The merger's commands the replica has not executed yet.
    pub apply: CommandSequence,
    /// Replica commands left out of the merger, in path order.
    pub discarded: Vec<Command>,
}

impl ReplicaPlan {
    /// Rollback followed by apply.
    pub fn instructions(&self) -> CommandSequence {
        self.rollback.then(&self.apply)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncPlan {
    pub merger: Merger,
    pub replicas: Vec<ReplicaPlan>,
}

fn ordered(cmds: Vec<Command>) -> CommandSequence {
    // Any subset of a canonical set orders by the same rule.
    let set = CanonicalSet::from_trusted(cmds);
    order_canonical(&set)
}

fn plan_for(replica: &CanonicalSet, merger: &CanonicalSet) -> ReplicaPlan {
    let discarded = replica.difference(merger);
    ReplicaPlan {
        rollback: ordered(discarded.clone()).inverse(),
        apply: ordered(merger.difference(replica)),
        discarded,
    }
}

/// Validates that `merger` is a merger of `sets`: a canonical subset of the
/// union that no union command can extend without conflict. Linear after
/// sorting.
pub fn check_merger(sets: &[CanonicalSet], merger: &CanonicalSet) -> Result<(), ReconcileError> {
    check_canonical(merger).map_err(|e| ReconcileError::NotAMerger(e.to_string()))?;
    let index = UnionIndex::new(sets)?;
    let nodes = index.node_count();
    let mut chosen: Vec<Option<&Command>> = vec![None; nodes];
    for cmd in merger {
        let found = index.find_node(&cmd.node).and_then(|n| {
            index.groups[n].clone().map(|i| &index.commands[i].cmd).find(|c| *c == cmd).map(|c| (n, c))
        });
        let Some((n, c)) = found else {
            return Err(ReconcileError::NotAMerger(format!("{cmd} is not in the union")));
        };
        chosen[n] = Some(c);
    }
    // Some merger command strictly above outputs a non-directory.
    let mut above = vec![false; nodes];
    for n in 0..nodes {
        if let Some(u) = index.up.up(n) {
            above[n] = above[u] || chosen[u].is_some_and(|c| !c.output.is_dir());
        }
    }
    // Some merger command strictly below outputs non-empty content.
    let mut below = vec![false; nodes];
    for n in (0..nodes).rev() {
        if let Some(u) = index.up.up(n) {
            if below[n] || chosen[n].is_some_and(|c| !c.output.is_empty()) {
                below[u] = true;
            }
        }
    }
    for n in (0..nodes).filter(|&n| chosen[n].is_none()) {
        for i in index.groups[n].clone() {
            let cmd = &index.commands[i].cmd;
            let blocked = (above[n] && !cmd.output.is_empty()) || (below[n] && !cmd.output.is_dir());
            if !blocked {
                return Err(ReconcileError::NotAMerger(format!("{cmd} can be added without conflict")));
            }
        }
    }
    Ok(())
}

/// Per-replica rollback and apply sequences for a merger of `sets`.
pub fn make_plan(sets: &[CanonicalSet], merger: &CanonicalSet) -> Result<SyncPlan, ReconcileError> {
    check_merger(sets, merger)?;
    Ok(SyncPlan {
        merger: Merger::from_set(merger.clone(), sets),
        replicas: sets.iter().map(|a| plan_for(a, merger)).collect(),
    })
}

/// Result of merging a replica's newer edits into an agreed merger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsyncOutcome {
    /// Takes the replica's current state to the extended merged state.
    pub instructions: CommandSequence,
    /// Commands added on top of the agreed merger.
    pub carried_forward: CanonicalSet,
    /// Current replica commands that did not survive.
    pub discarded: Vec<Command>,
}

/// Merges the current divergence of a replica (measured against the original
/// filesystem) into an agreed merger, keeping the merger intact.
pub fn async_merge(current: &CanonicalSet, merger: &CanonicalSet) -> Result<AsyncOutcome, ReconcileError> {
    let extended = merger_extending(&[current.clone(), merger.clone()], merger)?.into_set();
    let plan = plan_for(current, &extended);
    Ok(AsyncOutcome {
        instructions: plan.instructions(),
        carried_forward: CanonicalSet::from_trusted(extended.difference(merger)),
        discarded: plan.discarded,
    })
}

/// Runs the full cycle for every replica from `fs0` and checks that all land
/// on the merger's state.
pub fn verify_convergence(fs0: &Filesystem, sets: &[CanonicalSet], plan: &SyncPlan) -> bool {
    let Ok(target) = fs0.apply_sequence(&plan.merger.commands().ordered()) else { return false };
    sets.len() == plan.replicas.len()
        && sets.iter().zip(&plan.replicas).all(|(a, rp)| {
            fs0.apply_sequence(&a.ordered())
                .and_then(|fs| fs.apply_sequence(&rp.instructions()))
                .is_ok_and(|fs| fs == target)
        })
}
