#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fsreconcile::canonical::CanonicalSet;
use fsreconcile::command::{conflicts, Command};
use fsreconcile::fsmodel::{Filesystem, Path, Value};
use fsreconcile::reconcile::diff;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn p(s: &str) -> Path {
    Path::parse(s).unwrap()
}

pub fn f(s: &str) -> Value {
    Value::file(s)
}

pub const E: Value = Value::Empty;
pub const D: Value = Value::Directory;

pub fn cmd(node: &str, input: Value, output: Value) -> Command {
    Command::new(p(node), input, output)
}

pub fn set(cmds: Vec<Command>) -> CanonicalSet {
    CanonicalSet::new(cmds).unwrap()
}

pub fn fs(entries: &[(&str, Value)]) -> Filesystem {
    Filesystem::from_entries(entries.iter().map(|(n, v)| (p(n), v.clone())))
}

/// The three-replica example: one replica removes `/a` after deleting its
/// only file, the other two create files below it.
pub struct Worked {
    pub fs0: Filesystem,
    pub sigma1: Command,
    pub sigma2: Command,
    pub sigma3: Command,
    pub tau: Command,
    pub rho1: Command,
    pub rho2: Command,
}

impl Worked {
    pub fn new() -> Self {
        Worked {
            fs0: fs(&[("/a", D), ("/a/b", D), ("/a/b/c", f("o"))]),
            sigma1: cmd("/a/b/c", f("o"), E),
            sigma2: cmd("/a/b", D, E),
            sigma3: cmd("/a", D, E),
            tau: cmd("/a/b/z", E, f("z")),
            rho1: cmd("/a/z", E, f("u")),
            rho2: cmd("/a/b/z", E, f("u")),
        }
    }

    pub fn sets(&self) -> Vec<CanonicalSet> {
        vec![
            set(vec![self.sigma1.clone(), self.sigma2.clone(), self.sigma3.clone()]),
            set(vec![self.tau.clone()]),
            set(vec![self.rho1.clone(), self.rho2.clone()]),
        ]
    }

    /// The four mergers, each as a sorted command list.
    pub fn mergers(&self) -> Vec<Vec<Command>> {
        let mut out = vec![
            sorted(vec![self.sigma1.clone(), self.sigma2.clone(), self.sigma3.clone()]),
            sorted(vec![self.sigma1.clone(), self.sigma2.clone(), self.rho1.clone()]),
            sorted(vec![self.sigma1.clone(), self.tau.clone(), self.rho1.clone()]),
            sorted(vec![self.sigma1.clone(), self.rho1.clone(), self.rho2.clone()]),
        ];
        out.sort();
        out
    }
}

pub fn sorted(mut v: Vec<Command>) -> Vec<Command> {
    v.sort();
    v
}

/// Node universe for random instances: depth <= 3 over a three-letter
/// alphabet, in path order.
pub fn universe() -> Vec<Path> {
    let names = ["a", "b", "c"];
    let mut out = Vec::new();
    for x in names {
        out.push(p(&format!("/{x}")));
        for y in names {
            out.push(p(&format!("/{x}/{y}")));
            for z in names {
                out.push(p(&format!("/{x}/{y}/{z}")));
            }
        }
    }
    out.sort();
    out
}

fn random_value(rng: &mut impl Rng) -> Value {
    match rng.gen_range(0..6) {
        0 | 1 => Value::Empty,
        2 | 3 => Value::Directory,
        4 => Value::file("x"),
        _ => Value::file(["y", "z", "w"][rng.gen_range(0..3)]),
    }
}

/// A random valid filesystem over [`universe`].
pub fn random_fs(rng: &mut impl Rng) -> Filesystem {
    let mut entries = BTreeMap::new();
    for node in universe() {
        let parent_ok = node.parent().map_or(true, |q| q.is_root() || entries.get(&q) == Some(&Value::Directory));
        let v = if parent_ok { random_value(rng) } else { Value::Empty };
        if !v.is_empty() {
            entries.insert(node, v);
        }
    }
    Filesystem::from_entries(entries)
}

/// A random valid filesystem near `base`: each node keeps its value with
/// probability `keep` when the tree allows.
pub fn perturb(base: &Filesystem, keep: f64, rng: &mut impl Rng) -> Filesystem {
    let mut entries: BTreeMap<Path, Value> = BTreeMap::new();
    for node in universe() {
        let parent_ok = node.parent().map_or(true, |q| q.is_root() || entries.get(&q) == Some(&Value::Directory));
        let v = if !parent_ok {
            Value::Empty
        } else if rng.gen_bool(keep) {
            base.read(&node)
        } else {
            random_value(rng)
        };
        if !v.is_empty() {
            entries.insert(node, v);
        }
    }
    let out = Filesystem::from_entries(entries);
    assert!(out.is_valid());
    out
}

/// A jointly refluent family: diffs from one origin to perturbations of it.
/// Each set has at most `max_len` commands.
pub fn random_family(rng: &mut impl Rng, replicas: usize, max_len: usize) -> (Filesystem, Vec<CanonicalSet>) {
    let fs0 = random_fs(rng);
    let mut sets = Vec::new();
    while sets.len() < replicas {
        let keep = rng.gen_range(0.4..0.9);
        let d = diff(&fs0, &perturb(&fs0, keep, rng));
        if d.len() <= max_len {
            sets.push(d);
        }
    }
    (fs0, sets)
}

/// Sets drawn from independent origins; usually not jointly refluent.
pub fn random_unrelated_sets(rng: &mut impl Rng, replicas: usize, max_len: usize) -> Vec<CanonicalSet> {
    let mut sets = Vec::new();
    while sets.len() < replicas {
        let base = if rng.gen_bool(0.5) { random_fs(rng) } else { Filesystem::new() };
        let d = diff(&base, &perturb(&base, rng.gen_range(0.6..0.95), rng));
        if d.len() <= max_len && !d.is_empty() {
            sets.push(d);
        }
    }
    sets
}

/// Random valid filesystems on which every set applies: the origin plus
/// perturbations of it away from the mentioned nodes and their ancestors.
pub fn common_origins(fs0: &Filesystem, sets: &[CanonicalSet], n: usize, rng: &mut impl Rng) -> Vec<Filesystem> {
    let mut out = vec![fs0.clone()];
    let mut tries = 0;
    while out.len() < n && tries < 50 * n {
        tries += 1;
        let cand = perturb(fs0, rng.gen_range(0.3..0.9), rng);
        if sets.iter().all(|a| cand.apply_sequence(&a.ordered()).is_ok()) {
            out.push(cand);
        }
    }
    out
}

/// Simulation oracle for joint refluence: searches the filesystems that put
/// each mentioned node at its common input and each unmentioned ancestor at
/// any value, and tries every set on each.
pub fn refluent_by_search(sets: &[CanonicalSet]) -> bool {
    let mut fixed: BTreeMap<Path, Value> = BTreeMap::new();
    for c in sets.iter().flat_map(|s| s.iter()) {
        match fixed.get(&c.node) {
            Some(v) if *v != c.input => return false,
            _ => {
                fixed.insert(c.node.clone(), c.input.clone());
            }
        }
    }
    let free: Vec<Path> = fixed
        .keys()
        .flat_map(|n| n.proper_ancestors())
        .filter(|a| !fixed.contains_key(a))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let choices = [Value::Empty, Value::Directory, Value::file("?")];
    let total = 3usize.pow(free.len() as u32);
    (0..total).any(|mut code| {
        let mut entries = fixed.clone();
        for node in &free {
            entries.insert(node.clone(), choices[code % 3].clone());
            code /= 3;
        }
        let candidate = Filesystem::from_entries(entries.clone());
        // from_entries drops Empty values; the tree must still hold
        candidate.is_valid() && sets.iter().all(|a| candidate.apply_sequence(&a.ordered()).is_ok())
    })
}

/// Brute-force mergers: all maximal conflict-free subsets of the union,
/// by exhaustive subset search. Exponential; tiny unions only.
pub fn mergers_by_subsets(sets: &[CanonicalSet]) -> Vec<Vec<Command>> {
    let union: Vec<Command> = sets.iter().flat_map(|s| s.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let n = union.len();
    assert!(n <= 20, "union too large for subset search");
    let free = |mask: u32| {
        (0..n).all(|i| mask >> i & 1 == 0 || (i + 1..n).all(|j| mask >> j & 1 == 0 || !conflicts(&union[i], &union[j])))
    };
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if free(mask) && (0..n).all(|i| mask >> i & 1 == 1 || !free(mask | 1 << i)) {
            out.push(sorted((0..n).filter(|i| mask >> i & 1 == 1).map(|i| union[i].clone()).collect()));
        }
    }
    out.sort();
    out
}

pub fn shuffled<T: Clone>(v: &[T], rng: &mut impl Rng) -> Vec<T> {
    let mut v = v.to_vec();
    v.shuffle(rng);
    v
}

/// Proptest strategy for a seed driving the hand-rolled generators above.
pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

pub fn rng_from(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
pub mod props;
