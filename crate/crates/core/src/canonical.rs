//! Up-links, canonical sets and their orderings.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::command::{order_rel, Command, CommandSequence};
use crate::fsmodel::Path;

impl AsRef<Path> for Command {
    fn as_ref(&self) -> &Path {
        &self.node
    }
}

impl AsRef<Path> for Path {
    fn as_ref(&self) -> &Path {
        self
    }
}

/// Nearest-ancestor links over a list of nodes sorted in path order.
///
/// `up(i)` is the index of the lowest entry whose node is strictly above
/// entry `i`, or `None`. Built in one left-to-right sweep that walks the
/// right boundary of the processed prefix; every link is followed and
/// discarded at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpIndex {
    up: Vec<Option<usize>>,
    steps: usize,
}

impl UpIndex {
    pub fn build<T: AsRef<Path>>(sorted: &[T]) -> Self {
        let mut up: Vec<Option<usize>> = Vec::with_capacity(sorted.len());
        let mut steps = 0;
        for (i, item) in sorted.iter().enumerate() {
            let node = item.as_ref();
            let mut candidate = i.checked_sub(1);
            let link = loop {
                steps += 1;
                match candidate {
                    None => break None,
                    Some(c) if sorted[c].as_ref().is_ancestor_of(node) => break Some(c),
                    Some(c) => candidate = up[c],
                }
            };
            up.push(link);
        }
        UpIndex { up, steps }
    }

    pub fn up(&self, i: usize) -> Option<usize> {
        self.up[i]
    }

    pub fn links(&self) -> &[Option<usize>] {
        &self.up
    }

    /// Number of link comparisons performed while building.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }
}

/// Builds the up-links of a path-sorted list.
pub fn build_up_index<T: AsRef<Path>>(sorted: &[T]) -> UpIndex {
    UpIndex::build(sorted)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotCanonical {
    #[error("NotCanonical: null command at {0}")]
    NullCommand(Path),
    #[error("NotCanonical: multiple commands on {0}")]
    DuplicateNode(Path),
    #[error("NotCanonical: gap between {upper} and {lower}")]
    Gap { upper: Path, lower: Path },
    #[error("NotCanonical: commands on {parent} and {child} are not order-related")]
    Unrelated { parent: Path, child: Path },
}

fn check_sorted(sorted: &[Command]) -> Result<(), NotCanonical> {
    for (i, cmd) in sorted.iter().enumerate() {
        if cmd.is_null() {
            return Err(NotCanonical::NullCommand(cmd.node.clone()));
        }
        if i > 0 && sorted[i - 1].node == cmd.node {
            return Err(NotCanonical::DuplicateNode(cmd.node.clone()));
        }
    }
    let index = UpIndex::build(sorted);
    for (i, cmd) in sorted.iter().enumerate() {
        let Some(u) = index.up(i) else { continue };
        let upper = &sorted[u];
        if !upper.node.is_parent_of(&cmd.node) {
            return Err(NotCanonical::Gap { upper: upper.node.clone(), lower: cmd.node.clone() });
        }
        if !(order_rel(upper, cmd) || order_rel(cmd, upper)) {
            return Err(NotCanonical::Unrelated { parent: upper.node.clone(), child: cmd.node.clone() });
        }
    }
    Ok(())
}

/// Checks whether a collection of commands forms a canonical set.
pub fn check_canonical(cmds: &[Command]) -> Result<(), NotCanonical> {
    let mut sorted = cmds.to_vec();
    sorted.sort_by(|a, b| a.node.cmp(&b.node));
    check_sorted(&sorted)
}

pub fn is_canonical(cmds: &[Command]) -> bool {
    check_canonical(cmds).is_ok()
}

/// Canonical command set, stored in path order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct CanonicalSet(Vec<Command>);

impl CanonicalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(cmds: impl IntoIterator<Item = Command>) -> Result<Self, NotCanonical> {
        let mut cmds: Vec<Command> = cmds.into_iter().collect();
        cmds.sort_by(|a, b| a.node.cmp(&b.node));
        check_sorted(&cmds)?;
        Ok(CanonicalSet(cmds))
    }

    /// Wraps commands already known to be canonical; sorts them.
    /// For commands already in node order.
    pub(crate) fn from_sorted(cmds: Vec<Command>) -> Self {
        debug_assert!(check_sorted(&cmds).is_ok(), "not canonical: {cmds:?}");
        CanonicalSet(cmds)
    }

    pub(crate) fn from_trusted(mut cmds: Vec<Command>) -> Self {
        cmds.sort_by(|a, b| a.node.cmp(&b.node));
        debug_assert!(check_sorted(&cmds).is_ok(), "not canonical: {cmds:?}");
        CanonicalSet(cmds)
    }

    pub fn commands(&self) -> &[Command] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Command> {
        self.0
    }

    /// Command on `node`, if any.
    pub fn get(&self, node: &Path) -> Option<&Command> {
        self.0.binary_search_by(|c| c.node.cmp(node)).ok().map(|i| &self.0[i])
    }

    pub fn contains(&self, cmd: &Command) -> bool {
        self.get(&cmd.node).is_some_and(|c| c == cmd)
    }

    /// Commands of `self` not in `other`. Any subset of a canonical set
    /// obtained this way is returned unchecked; callers use it where the
    /// difference is known to be canonical.
    pub fn difference(&self, other: &CanonicalSet) -> Vec<Command> {
        self.0.iter().filter(|c| !other.contains(c)).cloned().collect()
    }

    pub fn intersection(&self, other: &CanonicalSet) -> Vec<Command> {
        self.0.iter().filter(|c| other.contains(c)).cloned().collect()
    }

    pub fn is_subset_of(&self, other: &CanonicalSet) -> bool {
        self.0.iter().all(|c| other.contains(c))
    }

    /// Canonical ordering of the set.
    pub fn ordered(&self) -> CommandSequence {
        order_sorted(&self.0)
    }
}

impl Deref for CanonicalSet {
    type Target = [Command];

    fn deref(&self) -> &[Command] {
        &self.0
    }
}

impl fmt::Debug for CanonicalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a CanonicalSet {
    type Item = &'a Command;
    type IntoIter = std::slice::Iter<'a, Command>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn order_sorted(sorted: &[Command]) -> CommandSequence {
    let constructors = sorted.iter().filter(|c| c.is_constructor());
    let rest = sorted.iter().rev().filter(|c| !c.is_constructor());
    constructors.chain(rest).cloned().collect()
}

/// Orders a canonical set: constructors top-down, then everything else
/// bottom-up.
pub fn order_canonical(set: &CanonicalSet) -> CommandSequence {
    set.ordered()
}

/// Orders an arbitrary command list after checking it is canonical.
pub fn order_commands(cmds: &[Command]) -> Result<CommandSequence, NotCanonical> {
    Ok(CanonicalSet::new(cmds.iter().cloned())?.ordered())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BrokenSequence {
    #[error("BrokenSequence: on {node}, command #{index} expects {expected:?} but the previous one left {found:?}")]
    Discontinuous { node: Path, index: usize, expected: crate::fsmodel::Value, found: crate::fsmodel::Value },
    #[error("BrokenSequence: collapsed set is not canonical ({0})")]
    NotCanonical(#[from] NotCanonical),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CanonizeMode {
    /// Reject sequences detected as breaking.
    #[default]
    Strict,
    /// Collapse without validation.
    Lenient,
}

/// Collapses a sequence into a canonical set that semantically extends it.
pub fn canonize(seq: &[Command]) -> Result<CanonicalSet, BrokenSequence> {
    canonize_with(seq, CanonizeMode::Strict)
}

pub fn canonize_with(seq: &[Command], mode: CanonizeMode) -> Result<CanonicalSet, BrokenSequence> {
    let mut order: Vec<usize> = (0..seq.len()).collect();
    // stable: same-node commands keep their original relative order
    order.sort_by(|&a, &b| seq[a].node.cmp(&seq[b].node));

    let mut out = Vec::new();
    let mut run_start = 0;
    while run_start < order.len() {
        let first = &seq[order[run_start]];
        let mut run_end = run_start + 1;
        while run_end < order.len() && seq[order[run_end]].node == first.node {
            if mode == CanonizeMode::Strict {
                let prev = &seq[order[run_end - 1]];
                let next = &seq[order[run_end]];
                if prev.output != next.input {
                    return Err(BrokenSequence::Discontinuous {
                        node: next.node.clone(),
                        index: order[run_end],
                        expected: next.input.clone(),
                        found: prev.output.clone(),
                    });
                }
            }
            run_end += 1;
        }
        let last = &seq[order[run_end - 1]];
        if first.input != last.output {
            let mut cmd = Command::new(first.node.clone(), first.input.clone(), last.output.clone());
            cmd.origin = first.origin;
            out.push(cmd);
        }
        run_start = run_end;
    }
    match mode {
        CanonizeMode::Strict => {
            check_sorted(&out)?;
            Ok(CanonicalSet(out))
        }
        CanonizeMode::Lenient => Ok(CanonicalSet(out)),
    }
}

/// Whether `b` can be executed first within `a`: `b ⊆ a` and no command of
/// `a \ b` must run before a command of `b`.
pub fn is_initial_segment(b: &[Command], a: &CanonicalSet) -> bool {
    if !b.iter().all(|c| a.contains(c)) {
        return false;
    }
    let in_b: HashSet<&Command> = b.iter().collect();
    let by_node: HashMap<&Path, &Command> = a.iter().map(|c| (&c.node, c)).collect();
    a.iter().all(|child| {
        let Some(parent) = child.node.parent().and_then(|p| by_node.get(&p).copied()) else {
            return true;
        };
        match (in_b.contains(child), in_b.contains(parent)) {
            (true, false) => !order_rel(parent, child),
            (false, true) => !order_rel(child, parent),
            _ => true,
        }
    })
}
