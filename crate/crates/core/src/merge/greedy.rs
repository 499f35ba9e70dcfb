use crate::canonical::{check_canonical, CanonicalSet};
use crate::fsmodel::ValueType;

use super::oracle::Decider;
use super::union::{Scratch, UnionIndex};
use super::{DecisionOracle, MergeError, Merger, WorkCounters};

/// Greedy merger with the first-wins policy.
pub fn greedy_merger(sets: &[CanonicalSet]) -> Result<Merger, MergeError> {
    greedy_merger_with(sets, &DecisionOracle::FirstWins)
}

/// Greedy merger; the oracle picks among the eligible commands of a node
/// whenever there is more than one.
pub fn greedy_merger_with(sets: &[CanonicalSet], oracle: &DecisionOracle) -> Result<Merger, MergeError> {
    let index = UnionIndex::new(sets)?;
    greedy_merger_on(&index, oracle).map(|(m, _)| m)
}

/// Post-sort phase of the greedy merger over a prepared union.
pub fn greedy_merger_on(index: &UnionIndex, oracle: &DecisionOracle) -> Result<(Merger, WorkCounters), MergeError> {
    let mut scratch = Scratch::new(index);
    let mut decider = Decider::new(oracle);
    greedy_pass(&mut scratch, &mut decider, None)?;
    decider.finish()?;
    Ok((Merger::from_union(scratch.survivors()), scratch.counters))
}

fn greedy_pass(scratch: &mut Scratch<'_>, decider: &mut Decider, forced: Option<&[bool]>) -> Result<(), MergeError> {
    let mut eligible = Vec::new();
    for n in 0..scratch.index.node_count() {
        scratch.inherit_down(n);
        eligible.clear();
        eligible.extend(scratch.alive_at(n));
        let winner = match eligible.as_slice() {
            [] => continue,
            [only] => *only,
            _ => match forced.and_then(|f| eligible.iter().copied().find(|&i| f[i])) {
                Some(i) => i,
                None => eligible[decider.choose(eligible.len())?],
            },
        };
        scratch.keep_only(n, winner);
        if scratch.index.output(winner) != ValueType::Directory {
            scratch.set_down(n);
        }
    }
    Ok(())
}

/// A merger containing the canonical subset `forced` of the union.
pub fn merger_extending(sets: &[CanonicalSet], forced: &CanonicalSet) -> Result<Merger, MergeError> {
    let index = UnionIndex::new(sets)?;
    merger_extending_on(&index, forced).map(|(m, _)| m)
}

/// Post-sort phase of [`merger_extending`].
pub fn merger_extending_on(index: &UnionIndex, forced: &CanonicalSet) -> Result<(Merger, WorkCounters), MergeError> {
    check_canonical(forced)?;
    let mut is_forced = vec![false; index.commands.len()];
    let mut at_node = vec![None; index.node_count()];
    for cmd in forced {
        let n = index
            .find_node(&cmd.node)
            .ok_or_else(|| MergeError::NotCanonicalSubset(format!("{cmd} is not in the union")))?;
        let i = index.groups[n]
            .clone()
            .find(|&i| index.commands[i].cmd == *cmd)
            .ok_or_else(|| MergeError::NotCanonicalSubset(format!("{cmd} is not in the union")))?;
        is_forced[i] = true;
        at_node[n] = Some(i);
    }

    let mut scratch = Scratch::new(index);
    for n in 0..index.node_count() {
        scratch.inherit_down(n);
        let Some(c) = at_node[n] else { continue };
        if !scratch.alive[c] {
            let cmd = &index.commands[c].cmd;
            return Err(MergeError::NotCanonicalSubset(format!("{cmd} conflicts with another forced command")));
        }
        scratch.keep_only(n, c);
        let cmd = &index.commands[c].cmd;
        if !cmd.output.is_dir() {
            scratch.set_down(n);
        }
        if !cmd.output.is_empty() {
            scratch.delete_upward(n, false);
        }
    }
    if let Some(c) = (0..is_forced.len()).find(|&c| is_forced[c] && !scratch.alive[c]) {
        let cmd = &index.commands[c].cmd;
        return Err(MergeError::NotCanonicalSubset(format!("{cmd} conflicts with another forced command")));
    }
    let mut decider = Decider::new(&DecisionOracle::FirstWins);
    greedy_pass(&mut scratch, &mut decider, Some(&is_forced))?;
    Ok((Merger::from_union(scratch.survivors()), scratch.counters))
}
