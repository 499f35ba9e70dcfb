//! Joint refluence of canonical sets: the linear-time check, witness
//! construction, and the direct applicability / pairwise criteria.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::canonical::{CanonicalSet, UpIndex};
use crate::command::{Command, ReplicaId};
use crate::fsmodel::{Filesystem, Path, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotRefluent {
    #[error("NotRefluent: commands on {node} disagree on the input value")]
    InputMismatch { node: Path },
    #[error("NotRefluent: gap between {upper} and {node}")]
    Gap { upper: Path, node: Path },
    #[error("NotRefluent: a replica changes {node} without changing its non-directory parent")]
    ParentNotCovered { node: Path },
    #[error("NotRefluent: a replica changes the parent of non-empty {node} without changing it")]
    ChildNotCovered { node: Path },
}

impl NotRefluent {
    /// Letter of the violated refluence condition.
    pub fn condition(&self) -> char {
        match self {
            NotRefluent::InputMismatch { .. } => 'a',
            NotRefluent::Gap { .. } => 'b',
            NotRefluent::ParentNotCovered { .. } => 'c',
            NotRefluent::ChildNotCovered { .. } => 'd',
        }
    }
}

/// How index-set inclusions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexStrategy {
    /// One machine word per node; requires at most 64 replicas.
    Bitmask,
    /// Count, per node, the replicas that also have a command on the parent.
    Counting,
}

/// Per-node summary of the union of the input sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeProfile {
    pub node: Path,
    /// Sorted replica indices with a command on this node.
    pub index_set: Vec<ReplicaId>,
    pub common_input: Value,
    pub up: Option<usize>,
}

struct Profiles {
    nodes: Vec<NodeProfile>,
    masks: Vec<u64>,
    /// Replicas having commands on both this node and its parent.
    shared_with_parent: Vec<usize>,
}

fn build_profiles(sets: &[CanonicalSet], strategy: IndexStrategy) -> Result<Profiles, NotRefluent> {
    let mut entries: Vec<(&Command, ReplicaId, bool)> = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let links = UpIndex::build(set.commands());
        for (j, cmd) in set.iter().enumerate() {
            let parent_in_set = links.up(j).is_some_and(|u| set[u].node.is_parent_of(&cmd.node));
            entries.push((cmd, i as ReplicaId, parent_in_set));
        }
    }
    entries.sort_by(|a, b| a.0.node.cmp(&b.0.node));

    let mut nodes: Vec<NodeProfile> = Vec::new();
    let mut masks = Vec::new();
    let mut shared_with_parent = Vec::new();
    for (cmd, replica, parent_in_set) in entries {
        match nodes.last_mut() {
            Some(last) if last.node == cmd.node => {
                if last.common_input != cmd.input {
                    return Err(NotRefluent::InputMismatch { node: cmd.node.clone() });
                }
                last.index_set.push(replica);
            }
            _ => {
                nodes.push(NodeProfile {
                    node: cmd.node.clone(),
                    index_set: vec![replica],
                    common_input: cmd.input.clone(),
                    up: None,
                });
                masks.push(0);
                shared_with_parent.push(0);
            }
        }
        let last = nodes.len() - 1;
        if strategy == IndexStrategy::Bitmask {
            masks[last] |= 1u64 << replica;
        }
        if parent_in_set {
            shared_with_parent[last] += 1;
        }
    }
    let links = UpIndex::build(&nodes.iter().map(|n| &n.node).collect::<Vec<_>>());
    for (i, n) in nodes.iter_mut().enumerate() {
        n.up = links.up(i);
    }
    Ok(Profiles { nodes, masks, shared_with_parent })
}

/// Computes the node profiles of a family of canonical sets.
pub fn node_profiles(sets: &[CanonicalSet]) -> Result<Vec<NodeProfile>, NotRefluent> {
    Ok(build_profiles(sets, IndexStrategy::Counting)?.nodes)
}

/// Checks joint refluence, picking the bitmask strategy when it fits.
pub fn check_jointly_refluent(sets: &[CanonicalSet]) -> Result<(), NotRefluent> {
    let strategy = if sets.len() <= 64 { IndexStrategy::Bitmask } else { IndexStrategy::Counting };
    check_jointly_refluent_with(sets, strategy)
}

pub fn is_jointly_refluent(sets: &[CanonicalSet]) -> bool {
    check_jointly_refluent(sets).is_ok()
}

/// Joint refluence with an explicit index-set strategy.
///
/// # Panics
///
/// With [`IndexStrategy::Bitmask`] and more than 64 sets.
pub fn check_jointly_refluent_with(sets: &[CanonicalSet], strategy: IndexStrategy) -> Result<(), NotRefluent> {
    assert!(
        strategy == IndexStrategy::Counting || sets.len() <= 64,
        "bitmask strategy supports at most 64 replicas"
    );
    let profiles = build_profiles(sets, strategy)?;
    let nodes = &profiles.nodes;
    for (i, n) in nodes.iter().enumerate() {
        let Some(u) = n.up else { continue };
        let parent = &nodes[u];
        if !parent.node.is_parent_of(&n.node) {
            return Err(NotRefluent::Gap { upper: parent.node.clone(), node: n.node.clone() });
        }
        let (child_in_parent, parent_in_child) = match strategy {
            IndexStrategy::Bitmask => {
                let (cm, pm) = (profiles.masks[i], profiles.masks[u]);
                (cm & !pm == 0, pm & !cm == 0)
            }
            IndexStrategy::Counting => {
                let shared = profiles.shared_with_parent[i];
                (shared == n.index_set.len(), shared == parent.index_set.len())
            }
        };
        if !parent.common_input.is_dir() && !child_in_parent {
            return Err(NotRefluent::ParentNotCovered { node: n.node.clone() });
        }
        if !n.common_input.is_empty() && !parent_in_child {
            return Err(NotRefluent::ChildNotCovered { node: n.node.clone() });
        }
    }
    Ok(())
}

/// Builds a filesystem every set applies to.
///
/// Mentioned nodes get their common input; unmentioned ancestors of
/// mentioned nodes become directories; everything else stays Empty.
pub fn witness_filesystem(sets: &[CanonicalSet]) -> Result<Filesystem, NotRefluent> {
    check_jointly_refluent(sets)?;
    let profiles = node_profiles(sets)?;
    let mentioned: HashMap<&Path, &Value> = profiles.iter().map(|n| (&n.node, &n.common_input)).collect();
    let mut fs = Filesystem::new();
    for n in &profiles {
        fs.set_unchecked(n.node.clone(), n.common_input.clone());
    }
    for n in &profiles {
        for ancestor in n.node.proper_ancestors() {
            if mentioned.contains_key(&ancestor) || fs.read(&ancestor).is_dir() {
                break;
            }
            fs.set_unchecked(ancestor, Value::Directory);
        }
    }
    debug_assert!(fs.is_valid());
    Ok(fs)
}

/// Direct applicability criterion of a canonical set to a valid filesystem:
/// inputs match, unmentioned nodes below destructors are Empty, unmentioned
/// nodes above constructors are directories.
pub fn check_applicable(set: &CanonicalSet, fs: &Filesystem) -> bool {
    set.iter().all(|cmd| {
        if fs.read(&cmd.node) != cmd.input {
            return false;
        }
        if cmd.is_destructor() && fs.descendants(&cmd.node).any(|(p, _)| set.get(p).is_none()) {
            return false;
        }
        if cmd.is_constructor()
            && cmd
                .node
                .proper_ancestors()
                .any(|a| set.get(&a).is_none() && !fs.read(&a).is_dir())
        {
            return false;
        }
        true
    })
}

/// Pairwise refluence of two canonical sets via the two-set criterion:
/// shared nodes agree on input, no gaps in the union, and at every
/// parent-child boundary where only one side is mentioned by a set, the
/// parent holds a directory or the child is Empty respectively.
pub fn check_pairwise_refluent(a: &CanonicalSet, b: &CanonicalSet) -> bool {
    // node -> (input, in a, in b)
    let mut union: BTreeMap<&Path, (&Value, bool, bool)> = BTreeMap::new();
    for (cmd, from_a) in a.iter().map(|c| (c, true)).chain(b.iter().map(|c| (c, false))) {
        let entry = union.entry(&cmd.node).or_insert((&cmd.input, false, false));
        if entry.0 != &cmd.input {
            return false;
        }
        if from_a {
            entry.1 = true;
        } else {
            entry.2 = true;
        }
    }
    let nodes: Vec<(&Path, (&Value, bool, bool))> = union.into_iter().collect();
    let links = UpIndex::build(&nodes.iter().map(|(p, _)| *p).collect::<Vec<_>>());
    for (i, (node, (input, in_a, in_b))) in nodes.iter().enumerate() {
        let Some(u) = links.up(i) else { continue };
        let (parent, (parent_input, parent_a, parent_b)) = &nodes[u];
        if !parent.is_parent_of(node) {
            return false;
        }
        let child_only = (*in_a && !parent_a) || (*in_b && !parent_b);
        let parent_only = (*parent_a && !in_a) || (*parent_b && !in_b);
        if child_only && !parent_input.is_dir() {
            return false;
        }
        if parent_only && !input.is_empty() {
            return false;
        }
    }
    true
}
