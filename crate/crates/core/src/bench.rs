//! Synthetic multi-user workload and merge timing.
//!
//! The initial filesystem has directories `/i` and `/i/j` and files `/i/j/k`
//! where consecutive indices are within circular distance `T` modulo `S`.
//! User `u` removes the `/i/u` subtrees, turns the files `/i/j/x` with `x`
//! next to `u` into directories and fills each with `S` new files.

use std::io::Write;
use std::time::Instant;

use thiserror::Error;

use crate::canonical::CanonicalSet;
use crate::command::Command;
use crate::fsmodel::{Filesystem, Path, Value};
use crate::merge::{greedy_merger_on, sorted_union, DecisionOracle, UnionIndex, WorkCounters};
use crate::refluence::check_jointly_refluent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchConfigError {
    #[error("S = {0} outside the supported range")]
    Modulus(u32),
    #[error("T = {t} outside 1..={max}")]
    Distance { t: u32, max: u32 },
    #[error("users = {users} outside {min}..={max}")]
    Users { users: u32, min: u32, max: u32 },
    #[error("repeats must be positive")]
    Repeats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub s: u32,
    pub t: u32,
    pub users: u32,
    pub repeats: u32,
}

impl BenchConfig {
    /// The published sweep: `5 <= S <= 14`, `1 <= T <= (S-1)/2`,
    /// `2 <= users <= S-1`.
    pub fn new(s: u32, t: u32, users: u32, repeats: u32) -> Result<Self, BenchConfigError> {
        if !(5..=14).contains(&s) {
            return Err(BenchConfigError::Modulus(s));
        }
        if !(2..s).contains(&users) {
            return Err(BenchConfigError::Users { users, min: 2, max: s - 1 });
        }
        Self::extended(s, t, users, repeats)
    }

    /// Same shape without the published bounds on `S` and `users`; used to
    /// reach larger inputs.
    pub fn extended(s: u32, t: u32, users: u32, repeats: u32) -> Result<Self, BenchConfigError> {
        if s < 3 {
            return Err(BenchConfigError::Modulus(s));
        }
        let max = (s - 1) / 2;
        if !(1..=max).contains(&t) {
            return Err(BenchConfigError::Distance { t, max });
        }
        if !(1..=s).contains(&users) {
            return Err(BenchConfigError::Users { users, min: 1, max: s });
        }
        if repeats == 0 {
            return Err(BenchConfigError::Repeats);
        }
        Ok(BenchConfig { s, t, users, repeats })
    }
}

fn distance(a: u32, b: u32, s: u32) -> u32 {
    let d = a.abs_diff(b);
    d.min(s - d)
}

fn node(parts: &[u32]) -> Path {
    Path::from_segments(parts.iter().map(|p| p.to_string())).expect("numeric segments")
}

fn near(center: u32, s: u32, t: u32) -> impl Iterator<Item = u32> {
    (0..s).filter(move |&x| distance(center, x, s) <= t)
}

fn initial_file(i: u32, j: u32, k: u32) -> Value {
    Value::file(format!("{i},{j},{k}"))
}

/// The shared starting filesystem.
pub fn gen_initial_fs(s: u32, t: u32) -> Filesystem {
    let mut entries = Vec::new();
    for i in 0..s {
        entries.push((node(&[i]), Value::Directory));
        for j in near(i, s, t) {
            entries.push((node(&[i, j]), Value::Directory));
            for k in near(j, s, t) {
                entries.push((node(&[i, j, k]), initial_file(i, j, k)));
            }
        }
    }
    Filesystem::from_entries(entries)
}

/// The canonical command set of user `u` against [`gen_initial_fs`].
pub fn gen_user_changes(s: u32, t: u32, u: u32) -> CanonicalSet {
    let mut cmds = Vec::new();
    let neighbours = [(u + s - 1) % s, u, (u + 1) % s];
    for i in 0..s {
        for j in near(i, s, t) {
            if j == u {
                for k in near(u, s, t) {
                    cmds.push(Command::new(node(&[i, u, k]), initial_file(i, u, k), Value::Empty));
                }
                cmds.push(Command::new(node(&[i, u]), Value::Directory, Value::Empty));
                continue;
            }
            for x in near(j, s, t).filter(|x| neighbours.contains(x)) {
                cmds.push(Command::new(node(&[i, j, x]), initial_file(i, j, x), Value::Directory));
                for l in 0..s {
                    let content = Value::file(format!("{u},{i},{j},{x},{l}"));
                    cmds.push(Command::new(node(&[i, j, x, l]), Value::Empty, content));
                }
            }
        }
    }
    cmds.sort_by(|a, b| a.node.cmp(&b.node));
    CanonicalSet::from_trusted(cmds.into_iter().map(|c| c.with_origin(u)).collect())
}

/// Initial filesystem and the command sets of users `0..users`.
pub fn workload(cfg: &BenchConfig) -> (Filesystem, Vec<CanonicalSet>) {
    let sets = (0..cfg.users).map(|u| gen_user_changes(cfg.s, cfg.t, u)).collect();
    (gen_initial_fs(cfg.s, cfg.t), sets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Union, deduplication and sorting.
    Sort,
    /// Up-links and the greedy pass.
    Merge,
    /// Refluence check, sort and merge.
    Total,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Sort => "sort",
            Phase::Merge => "merge",
            Phase::Total => "total",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub s: u32,
    pub t: u32,
    pub users: u32,
    pub total_commands: usize,
    pub phase: Phase,
    pub run: u32,
    pub elapsed_seconds: f64,
}

/// Result of one timed pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct RunTiming {
    pub sort: f64,
    pub merge: f64,
    pub total: f64,
    pub merger_len: usize,
    pub work: WorkCounters,
}

/// Runs refluence check, sort and greedy merge once on `sets`.
pub fn time_pipeline(sets: &[CanonicalSet]) -> RunTiming {
    let start = Instant::now();
    check_jointly_refluent(sets).expect("workload sets are jointly refluent");
    let sort_start = Instant::now();
    let union = sorted_union(sets);
    let sort_end = Instant::now();
    let index = UnionIndex::from_sorted(union);
    let (merger, work) = greedy_merger_on(&index, &DecisionOracle::FirstWins).expect("first-wins never fails");
    let end = Instant::now();
    RunTiming {
        sort: (sort_end - sort_start).as_secs_f64(),
        merge: (end - sort_end).as_secs_f64(),
        total: (end - start).as_secs_f64(),
        merger_len: merger.len(),
        work,
    }
}

/// Times `cfg.repeats` runs; three records per run.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRecord> {
    let (_, sets) = workload(cfg);
    let total_commands = sets.iter().map(|s| s.len()).sum();
    let mut out = Vec::with_capacity(3 * cfg.repeats as usize);
    for run in 0..cfg.repeats {
        let timing = time_pipeline(&sets);
        for (phase, elapsed_seconds) in [(Phase::Sort, timing.sort), (Phase::Merge, timing.merge), (Phase::Total, timing.total)] {
            out.push(BenchRecord { s: cfg.s, t: cfg.t, users: cfg.users, total_commands, phase, run, elapsed_seconds });
        }
    }
    out
}

pub const CSV_HEADER: [&str; 7] = ["s", "t", "users", "total_commands", "phase", "run", "elapsed_seconds"];

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.s.to_string(),
            r.t.to_string(),
            r.users.to_string(),
            r.total_commands.to_string(),
            r.phase.as_str().to_string(),
            r.run.to_string(),
            format!("{:.9}", r.elapsed_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Commands user `0` submits for `(s, t)`; by symmetry every user submits
/// the same number.
pub fn per_user_commands(s: u32, t: u32) -> usize {
    gen_user_changes(s, t, 0).len()
}

/// The configuration with `users` replicas whose total command count is
/// closest to `target`, searching `S` up to `max_s`.
pub fn config_near(users: u32, target: usize, max_s: u32, repeats: u32) -> Option<BenchConfig> {
    let mut best: Option<(usize, BenchConfig)> = None;
    for s in (users + 1).max(5)..=max_s {
        for t in 1..=(s - 1) / 2 {
            let total = users as usize * per_user_commands(s, t);
            let gap = total.abs_diff(target);
            if best.as_ref().map_or(true, |(g, _)| gap < *g) {
                best = Some((gap, BenchConfig::extended(s, t, users, repeats).ok()?));
            }
            if total > target {
                break;
            }
        }
    }
    best.map(|(_, cfg)| cfg)
}
