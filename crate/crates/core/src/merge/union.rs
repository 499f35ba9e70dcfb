use std::collections::HashMap;

use smallvec::{smallvec, SmallVec};

use crate::canonical::{CanonicalSet, UpIndex};
use crate::command::{Command, ReplicaId};
use crate::fsmodel::{Path, ValueType};
use crate::refluence::{check_jointly_refluent, NotRefluent};

/// Replicas that submitted a command; sorted, non-empty.
pub type Provenance = SmallVec<[ReplicaId; 4]>;

/// A distinct command of the union with every replica that submitted it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionCommand {
    pub cmd: Command,
    pub provenance: Provenance,
}

/// Deduplicates the union of `sets` and sorts it by
/// (path, first replica, output type, output value).
///
/// Paths and contents are copied into fresh allocations in sorted order, so
/// one path is shared by all commands on a node and the later passes read
/// memory sequentially.
pub fn sorted_union(sets: &[CanonicalSet]) -> Vec<UnionCommand> {
    let mut seen: HashMap<&Command, usize> = HashMap::new();
    let mut out: Vec<UnionCommand> = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        for cmd in set {
            match seen.get(cmd) {
                Some(&at) => out[at].provenance.push(i as ReplicaId),
                None => {
                    seen.insert(cmd, out.len());
                    out.push(UnionCommand { cmd: cmd.clone().with_origin(i as ReplicaId), provenance: smallvec![i as ReplicaId] });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.cmd
            .node
            .cmp(&b.cmd.node)
            .then_with(|| a.provenance[0].cmp(&b.provenance[0]))
            .then_with(|| a.cmd.output_type().cmp(&b.cmd.output_type()))
            .then_with(|| a.cmd.output.cmp(&b.cmd.output))
            .then_with(|| a.cmd.input.cmp(&b.cmd.input))
    });
    let mut prev: Option<Path> = None;
    for u in &mut out {
        let node = match prev.take() {
            Some(p) if p == u.cmd.node => p,
            _ => u.cmd.node.copied(),
        };
        u.cmd.node = node.clone();
        u.cmd.input = u.cmd.input.copied();
        u.cmd.output = u.cmd.output.copied();
        prev = Some(node);
    }
    out
}

/// Operation counters for the post-sort phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounters {
    /// Link comparisons while building up-links.
    pub uplink_steps: usize,
    /// Flag writes (downward, upward and per-node choice flags).
    pub flag_writes: usize,
    /// Nodes touched by upward deletion walks.
    pub upward_visits: usize,
    /// Commands deleted.
    pub deletions: usize,
    /// Node visits across all passes.
    pub node_visits: usize,
}

impl WorkCounters {
    pub fn total(&self) -> usize {
        self.uplink_steps + self.flag_writes + self.upward_visits + self.deletions + self.node_visits
    }
}

/// Sorted union grouped by node, with up-links between distinct nodes.
#[derive(Debug, Clone)]
pub struct UnionIndex {
    pub(crate) commands: Vec<UnionCommand>,
    /// `groups[n]` is the command range of node `n`.
    pub(crate) groups: Vec<std::ops::Range<usize>>,
    pub(crate) up: UpIndex,
    /// Output type per command and input type per node, so the passes
    /// stay on small arrays.
    pub(crate) outputs: Vec<ValueType>,
    pub(crate) inputs: Vec<ValueType>,
}

impl UnionIndex {
    /// Checks refluence, then sorts and indexes the union.
    pub fn new(sets: &[CanonicalSet]) -> Result<Self, NotRefluent> {
        check_jointly_refluent(sets)?;
        Ok(Self::from_sorted(sorted_union(sets)))
    }

    /// Indexes an already sorted union. Linear.
    pub fn from_sorted(commands: Vec<UnionCommand>) -> Self {
        let mut groups = Vec::new();
        let mut inputs = Vec::new();
        let mut outputs = Vec::with_capacity(commands.len());
        let mut start = 0;
        for i in 0..commands.len() {
            let cmd = &commands[i].cmd;
            outputs.push(cmd.output.value_type());
            if i + 1 == commands.len() || commands[i + 1].cmd.node != cmd.node {
                inputs.push(cmd.input.value_type());
                groups.push(start..i + 1);
                start = i + 1;
            }
        }
        let nodes: Vec<&Path> = groups.iter().map(|g| &commands[g.start].cmd.node).collect();
        let up = UpIndex::build(&nodes);
        UnionIndex { commands, groups, up, outputs, inputs }
    }

    pub fn commands(&self) -> &[UnionCommand] {
        &self.commands
    }

    pub fn node_count(&self) -> usize {
        self.groups.len()
    }

    pub(crate) fn node(&self, n: usize) -> &Path {
        &self.commands[self.groups[n].start].cmd.node
    }

    /// Position of `path` among the nodes.
    pub(crate) fn find_node(&self, path: &Path) -> Option<usize> {
        self.groups.binary_search_by(|g| self.commands[g.start].cmd.node.cmp(path)).ok()
    }

    pub fn uplink_steps(&self) -> usize {
        self.up.steps()
    }

    /// Common input type of the commands on node `n`.
    pub(crate) fn input(&self, n: usize) -> ValueType {
        self.inputs[n]
    }

    pub(crate) fn output(&self, i: usize) -> ValueType {
        self.outputs[i]
    }
}

/// Per-run mutable state shared by the merge passes.
pub(crate) struct Scratch<'a> {
    pub index: &'a UnionIndex,
    pub alive: Vec<bool>,
    /// Delete non-Empty-output commands strictly below this node.
    pub down: Vec<bool>,
    /// Non-directory-output commands at and above this node were deleted.
    pub up_done: Vec<bool>,
    pub counters: WorkCounters,
}

impl<'a> Scratch<'a> {
    pub fn new(index: &'a UnionIndex) -> Self {
        Scratch {
            index,
            alive: vec![true; index.commands.len()],
            down: vec![false; index.groups.len()],
            up_done: vec![false; index.groups.len()],
            counters: WorkCounters { uplink_steps: index.up.steps(), ..WorkCounters::default() },
        }
    }

    pub fn alive_at(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.index.groups[n].clone().filter(move |&i| self.alive[i])
    }

    pub fn delete(&mut self, i: usize) {
        if self.alive[i] {
            self.alive[i] = false;
            self.counters.deletions += 1;
        }
    }

    pub fn delete_where(&mut self, n: usize, pred: impl Fn(ValueType) -> bool) {
        for i in self.index.groups[n].clone() {
            if self.alive[i] && pred(self.index.outputs[i]) {
                self.delete(i);
            }
        }
    }

    /// Keeps only command `keep` among the commands on node `n`.
    pub fn keep_only(&mut self, n: usize, keep: usize) {
        for i in self.index.groups[n].clone() {
            if i != keep {
                self.delete(i);
            }
        }
    }

    pub fn set_down(&mut self, n: usize) {
        if !self.down[n] {
            self.down[n] = true;
            self.counters.flag_writes += 1;
        }
    }

    /// Top-down propagation step: inherit the parent's downward flag and
    /// delete the non-Empty-output commands it covers.
    pub fn inherit_down(&mut self, n: usize) {
        self.counters.node_visits += 1;
        if let Some(u) = self.index.up.up(n) {
            if self.down[u] {
                self.set_down(n);
                self.delete_where(n, |out| out != ValueType::Empty);
            }
        }
    }

    /// Deletes non-directory-output commands above `n` (and at `n` when
    /// `inclusive`), stopping at the first node already processed.
    pub fn delete_upward(&mut self, n: usize, inclusive: bool) {
        let mut cursor = if inclusive { Some(n) } else { self.index.up.up(n) };
        while let Some(u) = cursor {
            if self.up_done[u] {
                break;
            }
            self.up_done[u] = true;
            self.counters.flag_writes += 1;
            self.counters.upward_visits += 1;
            self.delete_where(u, |out| out != ValueType::Directory);
            cursor = self.index.up.up(u);
        }
    }

    pub fn survivors(&self) -> impl Iterator<Item = &'a UnionCommand> + Clone + '_ {
        let commands = &self.index.commands;
        commands.iter().zip(&self.alive).filter(|(_, &a)| a).map(|(u, _)| u)
    }
}
