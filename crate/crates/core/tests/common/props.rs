//! Property checks shared by the property tests and the acceptance target.
//! Each takes a seed and returns a description of the first violation.

use std::collections::BTreeSet;

use fsreconcile::canonical::{canonize, is_canonical, is_initial_segment, CanonicalSet};
use fsreconcile::command::{order_rel, Command};
use fsreconcile::fsmodel::{Filesystem, Value};
use fsreconcile::merge::{
    enumerate_mergers, explore_generated_mergers, generate_merger, greedy_merger, merger_extending, DecisionOracle,
    Merger,
};
use fsreconcile::reconcile::{async_merge, check_merger, diff, make_plan, verify_convergence};
use fsreconcile::refluence::{
    check_applicable, check_jointly_refluent_with, check_pairwise_refluent, is_jointly_refluent, witness_filesystem,
    IndexStrategy,
};
use rand::Rng;

use super::*;

pub type Check = Result<(), String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn lists(ms: &[Merger]) -> Vec<Vec<Command>> {
    let mut v: Vec<Vec<Command>> = ms.iter().map(|m| sorted(m.commands().to_vec())).collect();
    v.sort();
    v
}

/// A random family of 1..=4 replicas with at most 12 commands each.
pub fn small_family(seed: u64) -> (Filesystem, Vec<CanonicalSet>) {
    let mut rng = rng_from(seed);
    let replicas = rng.gen_range(1..=4);
    random_family(&mut rng, replicas, 12)
}

/// Every generator output is a listed merger, and exhaustive scripted
/// generation reproduces the list.
pub fn oracle_equivalence(seed: u64) -> Check {
    let (_, sets) = small_family(seed);
    let all = lists(&enumerate_mergers(&sets, None).map_err(|e| e.to_string())?);
    let greedy = sorted(greedy_merger(&sets).map_err(|e| e.to_string())?.commands().to_vec());
    ensure(all.contains(&greedy), || format!("greedy output {greedy:?} not a merger of {sets:?}"))?;
    let random = generate_merger(&sets, &DecisionOracle::SeededRandom(seed)).map_err(|e| e.to_string())?;
    let random = sorted(random.commands().to_vec());
    ensure(all.contains(&random), || format!("generated {random:?} not a merger of {sets:?}"))?;
    for m in &all {
        let c = CanonicalSet::new(m.clone()).map_err(|e| e.to_string())?;
        let half = CanonicalSet::new(m.iter().take(m.len() / 2 + seed as usize % 2).cloned());
        for forced in [c].into_iter().chain(half.ok()) {
            let ext = sorted(merger_extending(&sets, &forced).map_err(|e| e.to_string())?.commands().to_vec());
            ensure(all.contains(&ext), || format!("extension {ext:?} not a merger of {sets:?}"))?;
            ensure(forced.iter().all(|x| ext.contains(x)), || format!("extension {ext:?} drops forced {forced:?}"))?;
        }
    }
    let explored = lists(&explore_generated_mergers(&sets, None).map_err(|e| e.to_string())?);
    ensure(explored == all, || format!("exhaustive generation {explored:?} differs from {all:?} on {sets:?}"))
}

/// Convergence on witness and random origins; discarded commands are dead.
pub fn convergence(seed: u64) -> Check {
    let (fs0, sets) = small_family(seed);
    let mut rng = rng_from(seed ^ 0x5eed);
    let witness = witness_filesystem(&sets).map_err(|e| e.to_string())?;
    let mut origins = common_origins(&fs0, &sets, 3, &mut rng);
    origins.push(witness);
    for m in enumerate_mergers(&sets, None).map_err(|e| e.to_string())? {
        let plan = make_plan(&sets, m.commands()).map_err(|e| e.to_string())?;
        for origin in &origins {
            ensure(verify_convergence(origin, &sets, &plan), || format!("no convergence for {m:?} on {origin:?}"))?;
            let synced = origin.apply_sequence(&m.commands().ordered()).map_err(|e| e.to_string())?;
            for r in &plan.replicas {
                for c in &r.discarded {
                    ensure(synced.apply_command(c).is_err(), || format!("discarded {c:?} still applies after {m:?}"))?;
                }
            }
        }
    }
    Ok(())
}

/// Pairwise refluence of every pair implies joint refluence; the linear
/// check agrees with a search for a common filesystem, under both
/// index-set strategies.
pub fn pairwise_implies_joint(seed: u64) -> Check {
    let mut rng = rng_from(seed);
    let replicas = rng.gen_range(2..=4);
    let sets = if rng.gen_bool(0.5) {
        random_family(&mut rng, replicas, 8).1
    } else {
        random_unrelated_sets(&mut rng, replicas, 6)
    };
    let pairwise = (0..sets.len()).all(|i| (i + 1..sets.len()).all(|j| check_pairwise_refluent(&sets[i], &sets[j])));
    let joint = is_jointly_refluent(&sets);
    ensure(!pairwise || joint, || format!("pairwise but not joint: {sets:?}"))?;
    let searched = refluent_by_search(&sets);
    ensure(joint == searched, || format!("linear check {joint} vs search {searched} on {sets:?}"))?;
    let bits = check_jointly_refluent_with(&sets, IndexStrategy::Bitmask).is_ok();
    let counting = check_jointly_refluent_with(&sets, IndexStrategy::Counting).is_ok();
    ensure(bits == joint && counting == joint, || format!("strategies disagree on {sets:?}"))?;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let pair = [sets[i].clone(), sets[j].clone()];
            let by_search = refluent_by_search(&pair);
            ensure(check_pairwise_refluent(&sets[i], &sets[j]) == by_search, || format!("pairwise check wrong on {pair:?}"))?;
        }
    }
    Ok(())
}

/// The applicability check agrees with running the set.
pub fn applicability(seed: u64) -> Check {
    let mut rng = rng_from(seed);
    let base = random_fs(&mut rng);
    let a = diff(&base, &perturb(&base, rng.gen_range(0.4..0.9), &mut rng));
    for target in [base.clone(), perturb(&base, 0.8, &mut rng), random_fs(&mut rng)] {
        let simulated = target.apply_sequence(&a.ordered()).is_ok();
        ensure(check_applicable(&a, &target) == simulated, || format!("applicability of {a:?} on {target:?}"))?;
    }
    Ok(())
}

/// The intersection of a merger with each input is an initial segment of both.
pub fn initial_segments(seed: u64) -> Check {
    let (_, sets) = small_family(seed);
    for m in enumerate_mergers(&sets, Some(32)).map_err(|e| e.to_string())? {
        for a in &sets {
            let common = a.intersection(m.commands());
            ensure(is_initial_segment(&common, a), || format!("{common:?} not initial in {a:?}"))?;
            ensure(is_initial_segment(&common, m.commands()), || format!("{common:?} not initial in {m:?}"))?;
        }
    }
    Ok(())
}

/// A random linear extension of the execution order of `set`.
pub fn random_linear_extension(set: &CanonicalSet, rng: &mut impl Rng) -> Vec<Command> {
    let cmds = set.to_vec();
    let mut placed = vec![false; cmds.len()];
    let mut out = Vec::new();
    while out.len() < cmds.len() {
        let ready: Vec<usize> = (0..cmds.len())
            .filter(|&i| !placed[i] && (0..cmds.len()).all(|j| placed[j] || j == i || !order_rel(&cmds[j], &cmds[i])))
            .collect();
        let i = ready[rng.gen_range(0..ready.len())];
        placed[i] = true;
        out.push(cmds[i].clone());
    }
    out
}

/// Every order that respects the execution order has the same effect.
pub fn order_invariance(seed: u64) -> Check {
    let mut rng = rng_from(seed);
    let base = random_fs(&mut rng);
    let a = diff(&base, &perturb(&base, rng.gen_range(0.3..0.9), &mut rng));
    let expected = base.apply_sequence(&a.ordered()).map_err(|e| e.to_string())?;
    let others = [perturb(&base, 0.8, &mut rng), random_fs(&mut rng)];
    for _ in 0..4 {
        let order = random_linear_extension(&a, &mut rng);
        let got = base.apply_all(order.iter()).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("order {order:?} differs"))?;
        for other in &others {
            let x = other.apply_all(order.iter()).ok();
            let y = other.apply_sequence(&a.ordered()).ok();
            ensure(x == y, || format!("order {order:?} differs on {other:?}"))?;
        }
    }
    Ok(())
}

/// Snapshot difference is canonical and maps one snapshot to the other.
pub fn diff_exactness(seed: u64) -> Check {
    let mut rng = rng_from(seed);
    let a = random_fs(&mut rng);
    let b = if rng.gen_bool(0.5) { random_fs(&mut rng) } else { perturb(&a, rng.gen_range(0.3..0.95), &mut rng) };
    let d = diff(&a, &b);
    ensure(is_canonical(&d), || format!("diff not canonical: {d:?}"))?;
    let got = a.apply_sequence(&d.ordered()).map_err(|e| e.to_string())?;
    ensure(got == b, || format!("diff does not reach target: {d:?}"))
}

/// Late edits folded into an agreed merger land where the merger plus the
/// carried-forward commands land.
pub fn async_identity(seed: u64) -> Check {
    let (fs0, sets) = small_family(seed);
    let mut rng = rng_from(seed ^ 0xa5a5);
    let merger = generate_merger(&sets, &DecisionOracle::SeededRandom(seed)).map_err(|e| e.to_string())?.into_set();
    let i = rng.gen_range(0..sets.len());
    let local = fs0.apply_sequence(&sets[i].ordered()).map_err(|e| e.to_string())?;
    let current = diff(&fs0, &perturb(&local, rng.gen_range(0.6..0.95), &mut rng));
    let out = async_merge(&current, &merger).map_err(|e| e.to_string())?;
    let mut origins = common_origins(&fs0, &[current.clone(), merger.clone()], 3, &mut rng);
    origins.push(witness_filesystem(&[current.clone(), merger.clone()]).map_err(|e| e.to_string())?);
    for origin in &origins {
        let left = origin.apply_sequence(&current.ordered()).and_then(|x| x.apply_sequence(&out.instructions));
        let right =
            origin.apply_sequence(&merger.ordered()).and_then(|x| x.apply_sequence(&out.carried_forward.ordered()));
        ensure(left.is_ok() && left.ok() == right.ok(), || format!("async identity fails for {current:?} into {merger:?}"))?;
    }
    Ok(())
}

/// The linear merger validation agrees with the brute-force definition on
/// random subsets of the union.
pub fn merger_validation(seed: u64) -> Check {
    let (_, sets) = small_family(seed);
    let mut rng = rng_from(seed ^ 0x77);
    let union: Vec<Command> = sets.iter().flat_map(|s| s.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    for _ in 0..8 {
        let pick: Vec<Command> = union.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        let Ok(candidate) = CanonicalSet::new(pick.clone()) else { continue };
        let fast = check_merger(&sets, &candidate).is_ok();
        let slow = fsreconcile::merge::is_merger_brute_force(&candidate, &sets);
        ensure(fast == slow, || format!("merger check {fast} vs {slow} for {candidate:?} in {sets:?}"))?;
    }
    Ok(())
}

/// A random valid command sequence from `fs`.
pub fn random_walk(fs: &Filesystem, len: usize, rng: &mut impl Rng) -> Vec<Command> {
    let nodes = universe();
    let values = [Value::Empty, Value::Directory, Value::file("x"), Value::file("y")];
    let mut state = fs.clone();
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < len && tries < 200 * len {
        tries += 1;
        let node = nodes[rng.gen_range(0..nodes.len())].clone();
        let cmd = Command::new(node.clone(), state.read(&node), values[rng.gen_range(0..values.len())].clone());
        if cmd.is_null() && rng.gen_bool(0.8) {
            continue;
        }
        if let Ok(next) = state.apply_command(&cmd) {
            state = next;
            out.push(cmd);
        }
    }
    out
}

/// Same-node runs where some command's input differs from the previous
/// command's output on that node.
pub fn discontinuous(seq: &[Command]) -> bool {
    seq.iter().enumerate().any(|(i, c)| {
        seq[..i].iter().rev().find(|p| p.node == c.node).is_some_and(|p| p.output != c.input)
    })
}

/// Applies one random mutation to a sequence.
pub fn mutate(seq: &[Command], rng: &mut impl Rng) -> Vec<Command> {
    let mut out = seq.to_vec();
    if out.is_empty() {
        return out;
    }
    let i = rng.gen_range(0..out.len());
    let values = [Value::Empty, Value::Directory, Value::file("x"), Value::file("y")];
    match rng.gen_range(0..4) {
        0 if out.len() > 1 => {
            let j = rng.gen_range(0..out.len());
            out.swap(i, j);
        }
        1 => out[i].input = values[rng.gen_range(0..values.len())].clone(),
        2 => {
            out.remove(i);
        }
        _ => {
            let c = out[i].clone();
            out.insert(rng.gen_range(0..=out.len()), c);
        }
    }
    out
}

/// Outcome counts for one batch of breaking-sequence detection.
#[derive(Default, Debug, Clone, Copy)]
pub struct Detection {
    pub discontinuous: usize,
    pub flagged_discontinuous: usize,
    pub applicable: usize,
    pub flagged_applicable: usize,
}

pub fn detection(seed: u64) -> Detection {
    let mut rng = rng_from(seed);
    let fs0 = random_fs(&mut rng);
    let samples = [fs0.clone(), perturb(&fs0, 0.8, &mut rng), random_fs(&mut rng), Filesystem::new()];
    let mut d = Detection::default();
    let walk = random_walk(&fs0, rng.gen_range(1..=14), &mut rng);
    let mut candidates = vec![walk.clone()];
    for _ in 0..4 {
        let mut m = mutate(&walk, &mut rng);
        if rng.gen_bool(0.3) {
            m = mutate(&m, &mut rng);
        }
        candidates.push(m);
    }
    for seq in candidates {
        let flagged = canonize(&seq).is_err();
        if discontinuous(&seq) {
            d.discontinuous += 1;
            d.flagged_discontinuous += flagged as usize;
        }
        if samples.iter().any(|s| s.apply_all(seq.iter()).is_ok()) {
            d.applicable += 1;
            d.flagged_applicable += flagged as usize;
        }
    }
    d
}
