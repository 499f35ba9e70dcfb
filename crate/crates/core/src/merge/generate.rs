use std::collections::BTreeSet;
use std::fmt;

use crate::canonical::CanonicalSet;
use crate::command::Command;
use crate::fsmodel::{Path, ValueType};

use super::oracle::Decider;
use super::union::{Scratch, UnionIndex};
use super::{DecisionOracle, MergeError, Merger, WorkCounters};

/// The conflict a decision point resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictClass {
    /// Several commands on a node holding a file.
    FileInput,
    /// Destructors on a directory versus constructors on its empty children.
    ParentChild,
    /// Several constructors on an empty node.
    EmptyInput,
    /// Several destructors on a directory.
    DirectoryInput,
}

impl fmt::Display for ConflictClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictClass::FileInput => "file-input",
            ConflictClass::ParentChild => "parent-child",
            ConflictClass::EmptyInput => "empty-input",
            ConflictClass::DirectoryInput => "directory-input",
        })
    }
}

/// One choice offered to the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidate {
    Command(Command),
    KeepDestructors,
    KeepConstructors,
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Command(c) => write!(f, "{c}"),
            Candidate::KeepDestructors => f.write_str("keep destructors"),
            Candidate::KeepConstructors => f.write_str("keep constructors"),
        }
    }
}

/// A point where the generator needed a choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionPoint {
    /// Zero-based position in the decision sequence.
    pub index: usize,
    pub node: Path,
    pub class: ConflictClass,
    pub candidates: Vec<Candidate>,
}

impl fmt::Display for DecisionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "decision {} at {} ({}):", self.index, self.node, self.class)?;
        for (i, c) in self.candidates.iter().enumerate() {
            write!(f, " [{i}] {c}")?;
        }
        Ok(())
    }
}

/// Observer called with each decision point and the choice taken.
pub type DecisionObserver<'a> = &'a mut dyn FnMut(&DecisionPoint, usize);

/// Generates a merger with the four-pass algorithm. Every merger is reachable
/// by some sequence of oracle choices.
pub fn generate_merger(sets: &[CanonicalSet], oracle: &DecisionOracle) -> Result<Merger, MergeError> {
    let index = UnionIndex::new(sets)?;
    generate_merger_on(&index, oracle).map(|(m, _)| m)
}

/// Like [`generate_merger`], reporting every decision point to `observer`.
pub fn generate_merger_with(
    sets: &[CanonicalSet],
    oracle: &DecisionOracle,
    observer: DecisionObserver<'_>,
) -> Result<Merger, MergeError> {
    let index = UnionIndex::new(sets)?;
    let mut decider = Decider::new(oracle);
    let (merger, _) = run(&index, &mut decider, Some(observer))?;
    decider.finish()?;
    Ok(merger)
}

/// Post-sort phase of [`generate_merger`] over a prepared union.
pub fn generate_merger_on(index: &UnionIndex, oracle: &DecisionOracle) -> Result<(Merger, WorkCounters), MergeError> {
    let mut decider = Decider::new(oracle);
    let out = run(index, &mut decider, None)?;
    decider.finish()?;
    Ok(out)
}

/// Every merger reachable by the four-pass generator, found by walking all
/// choice sequences. Sorted and deduplicated; stops after `limit` distinct
/// mergers when given.
pub fn explore_generated_mergers(sets: &[CanonicalSet], limit: Option<usize>) -> Result<Vec<Merger>, MergeError> {
    let index = UnionIndex::new(sets)?;
    let mut found = BTreeSet::new();
    let mut mergers = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut decider = Decider::exploring(prefix);
        let (merger, _) = run(&index, &mut decider, None)?;
        if found.insert(merger.commands().commands().to_vec()) {
            mergers.push(merger);
            if limit.is_some_and(|l| mergers.len() >= l) {
                break;
            }
        }
        let Decider { choices, arities, .. } = decider;
        let Some(j) = (0..choices.len()).rev().find(|&j| choices[j] + 1 < arities[j]) else { break };
        prefix = choices[..j].to_vec();
        prefix.push(choices[j] + 1);
    }
    mergers.sort_by(|a, b| a.commands().commands().cmp(b.commands().commands()));
    Ok(mergers)
}

struct Generator<'a, 'o> {
    s: Scratch<'a>,
    decider: &'a mut Decider,
    observer: Option<DecisionObserver<'o>>,
}

impl Generator<'_, '_> {
    fn decide(&mut self, n: usize, class: ConflictClass, candidates: impl FnOnce() -> Vec<Candidate>, arity: usize) -> Result<usize, MergeError> {
        let index = self.decider.made();
        let choice = self.decider.choose(arity)?;
        if let Some(observer) = self.observer.as_mut() {
            let point = DecisionPoint { index, node: self.s.index.node(n).clone(), class, candidates: candidates() };
            observer(&point, choice);
        }
        Ok(choice)
    }

    /// Picks a winner among the live commands of `n` and deletes the rest.
    fn same_node_winner(&mut self, n: usize, class: ConflictClass) -> Result<Option<usize>, MergeError> {
        let alive: Vec<usize> = self.s.alive_at(n).collect();
        let winner = match alive.as_slice() {
            [] => return Ok(None),
            [only] => *only,
            _ => {
                let index: &UnionIndex = self.s.index;
                let list = || alive.iter().map(|&i| Candidate::Command(index.commands[i].cmd.clone())).collect();
                alive[self.decide(n, class, list, alive.len())?]
            }
        };
        self.s.keep_only(n, winner);
        Ok(Some(winner))
    }

    fn input(&self, n: usize) -> ValueType {
        self.s.index.input(n)
    }

    fn output(&self, i: usize) -> ValueType {
        self.s.index.output(i)
    }

    fn has_alive(&self, n: usize) -> bool {
        self.s.alive_at(n).next().is_some()
    }

    /// Winners on file nodes; these nodes are pairwise incomparable.
    fn file_pass(&mut self) -> Result<(), MergeError> {
        for n in 0..self.s.index.node_count() {
            self.s.inherit_down(n);
            if self.input(n) != ValueType::File {
                continue;
            }
            let Some(w) = self.same_node_winner(n, ConflictClass::FileInput)? else { continue };
            if self.output(w) != ValueType::Directory {
                self.s.set_down(n);
            }
            if self.output(w) != ValueType::Empty {
                self.s.delete_upward(n, false);
            }
        }
        Ok(())
    }

    /// Directories with destructors whose empty children have constructors.
    fn parent_child_pass(&mut self) -> Result<(), MergeError> {
        let nodes = self.s.index.node_count();
        let mut constructor_below = vec![false; nodes];
        for n in (0..nodes).rev() {
            self.s.counters.node_visits += 1;
            match self.input(n) {
                ValueType::Empty => {
                    if let Some(p) = self.s.index.up.up(n) {
                        if self.has_alive(n) && self.s.index.node(p).is_parent_of(self.s.index.node(n)) {
                            constructor_below[p] = true;
                        }
                    }
                }
                ValueType::Directory if constructor_below[n] && self.has_alive(n) => {
                    let list = || vec![Candidate::KeepDestructors, Candidate::KeepConstructors];
                    if self.decide(n, ConflictClass::ParentChild, list, 2)? == 0 {
                        self.s.set_down(n);
                    } else {
                        self.s.delete_upward(n, true);
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn empty_pass(&mut self) -> Result<(), MergeError> {
        for n in 0..self.s.index.node_count() {
            self.s.inherit_down(n);
            if self.input(n) != ValueType::Empty {
                continue;
            }
            let Some(w) = self.same_node_winner(n, ConflictClass::EmptyInput)? else { continue };
            if self.output(w) == ValueType::File {
                self.s.set_down(n);
            }
        }
        Ok(())
    }

    fn directory_pass(&mut self) -> Result<(), MergeError> {
        for n in (0..self.s.index.node_count()).rev() {
            self.s.counters.node_visits += 1;
            if self.input(n) != ValueType::Directory {
                continue;
            }
            let Some(w) = self.same_node_winner(n, ConflictClass::DirectoryInput)? else { continue };
            if self.output(w) == ValueType::File {
                self.s.delete_upward(n, false);
            }
        }
        Ok(())
    }

    fn sweep(&mut self) {
        for n in 0..self.s.index.node_count() {
            self.s.inherit_down(n);
        }
    }
}

fn run(index: &UnionIndex, decider: &mut Decider, observer: Option<DecisionObserver<'_>>) -> Result<(Merger, WorkCounters), MergeError> {
    let mut g = Generator { s: Scratch::new(index), decider, observer };
    g.file_pass()?;
    g.parent_child_pass()?;
    g.empty_pass()?;
    g.directory_pass()?;
    g.sweep();
    Ok((Merger::from_union(g.s.survivors()), g.s.counters))
}
