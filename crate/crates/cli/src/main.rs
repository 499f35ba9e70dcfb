use std::fs;
use std::path::{Path as FilePath, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fsreconcile::bench::{run_bench, write_csv, BenchConfig};
use fsreconcile::canonical::{canonize_with, CanonizeMode};
use fsreconcile::merge::{enumerate_mergers, generate_merger_with, greedy_merger_with, merger_extending, DecisionPoint};
use fsreconcile::refluence::check_jointly_refluent;
use fsreconcile::text::{
    format_commands, format_filesystem, format_plan, parse_commands, parse_filesystem, parse_script,
};
use fsreconcile::{async_merge, diff, make_plan, CanonicalSet, Command, CommandSequence, DecisionOracle, Filesystem};

#[derive(Parser)]
#[command(name = "fsreconcile", version, about = "Reconcile diverged filesystem replicas")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    First,
}

#[derive(Subcommand)]
enum Cmd {
    /// Collapse a command sequence into a canonical set.
    Canonize {
        seq: PathBuf,
        /// Skip the breaking-sequence check.
        #[arg(long)]
        lenient: bool,
    },
    /// Check that a file holds a canonical set.
    CheckCanonical { set: PathBuf },
    /// Print a canonical set in an executable order.
    Order { set: PathBuf },
    /// Check that the sets are jointly refluent.
    Refluent {
        #[arg(required = true)]
        sets: Vec<PathBuf>,
    },
    /// Compute one merger of the sets.
    Merge {
        #[arg(required = true)]
        sets: Vec<PathBuf>,
        #[arg(long, conflicts_with = "script")]
        policy: Option<Policy>,
        /// Seeded random choices at decision points.
        #[arg(long, env = "SYNC_SEED")]
        seed: Option<u64>,
        /// One choice index per line, consumed in decision order.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Canonical subset of the union the merger must contain.
        #[arg(long, conflicts_with_all = ["script", "greedy"])]
        extend: Option<PathBuf>,
        /// Use the single-pass greedy merger instead of the generator.
        #[arg(long)]
        greedy: bool,
    },
    /// List every merger of the sets.
    Enumerate {
        #[arg(required = true)]
        sets: Vec<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// The canonical set taking the first snapshot to the second.
    Diff { from: PathBuf, to: PathBuf },
    /// Apply a set (or a `.seq` sequence) to a snapshot.
    Apply {
        fs: PathBuf,
        commands: PathBuf,
        /// Treat the commands as a sequence regardless of extension.
        #[arg(long)]
        sequence: bool,
    },
    /// Rollback and apply instructions for every replica.
    Plan {
        merger: PathBuf,
        #[arg(required = true)]
        sets: Vec<PathBuf>,
    },
    /// Merge a replica's current divergence into an agreed merger.
    AsyncMerge { current: PathBuf, merger: PathBuf },
    /// Time the merge on the synthetic workload.
    Bench {
        #[arg(long)]
        s: u32,
        #[arg(long)]
        t: u32,
        #[arg(long)]
        users: u32,
        #[arg(long, default_value_t = 3)]
        repeats: u32,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(path: &FilePath) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("IoError: cannot read {}", path.display()))
}

fn read_commands(path: &FilePath) -> Result<Vec<Command>> {
    parse_commands(&read(path)?).map_err(|e| anyhow!("{e} in {}", path.display()))
}

fn read_set(path: &FilePath) -> Result<CanonicalSet> {
    CanonicalSet::new(read_commands(path)?).map_err(|e| anyhow!("{e} in {}", path.display()))
}

fn read_sets(paths: &[PathBuf]) -> Result<Vec<CanonicalSet>> {
    paths.iter().map(|p| read_set(p)).collect()
}

fn read_fs(path: &FilePath) -> Result<Filesystem> {
    parse_filesystem(&read(path)?).map_err(|e| anyhow!("{e} in {}", path.display()))
}

fn print_commands<'a>(cmds: impl IntoIterator<Item = &'a Command>) {
    print!("{}", format_commands(cmds));
}

fn oracle(policy: Option<Policy>, seed: Option<u64>, script: Option<&FilePath>) -> Result<DecisionOracle> {
    Ok(match (script, policy, seed) {
        (Some(path), _, _) => {
            DecisionOracle::Scripted(parse_script(&read(path)?).map_err(|e| anyhow!("{e} in {}", path.display()))?)
        }
        (None, Some(Policy::First), _) | (None, None, None) => DecisionOracle::FirstWins,
        (None, None, Some(seed)) => DecisionOracle::SeededRandom(seed),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Canonize { seq, lenient } => {
            let mode = if lenient { CanonizeMode::Lenient } else { CanonizeMode::Strict };
            print_commands(&canonize_with(&read_commands(&seq)?, mode)?);
        }
        Cmd::CheckCanonical { set } => {
            read_set(&set)?;
            println!("canonical");
        }
        Cmd::Order { set } => print_commands(read_set(&set)?.ordered().iter()),
        Cmd::Refluent { sets } => {
            check_jointly_refluent(&read_sets(&sets)?)?;
            println!("refluent");
        }
        Cmd::Merge { sets, policy, seed, script, extend, greedy } => {
            let sets = read_sets(&sets)?;
            let merger = if let Some(forced) = extend {
                merger_extending(&sets, &read_set(&forced)?)?
            } else {
                let oracle = oracle(policy, seed, script.as_deref())?;
                if greedy {
                    greedy_merger_with(&sets, &oracle)?
                } else {
                    let mut comment = |pt: &DecisionPoint, choice: usize| eprintln!("# {pt} -> {choice}");
                    generate_merger_with(&sets, &oracle, &mut comment)?
                }
            };
            print_commands(merger.commands());
        }
        Cmd::Enumerate { sets, limit } => {
            for (k, m) in enumerate_mergers(&read_sets(&sets)?, limit)?.iter().enumerate() {
                println!("[merger {k}]");
                print_commands(m.commands());
            }
        }
        Cmd::Diff { from, to } => print_commands(&diff(&read_fs(&from)?, &read_fs(&to)?)),
        Cmd::Apply { fs: snapshot, commands, sequence } => {
            let start = read_fs(&snapshot)?;
            let seq = if sequence || commands.extension().is_some_and(|e| e == "seq") {
                CommandSequence::from(read_commands(&commands)?)
            } else {
                read_set(&commands)?.ordered()
            };
            print!("{}", format_filesystem(&start.apply_sequence(&seq)?));
        }
        Cmd::Plan { merger, sets } => {
            let plan = make_plan(&read_sets(&sets)?, &read_set(&merger)?)?;
            print!("{}", format_plan(&plan));
        }
        Cmd::AsyncMerge { current, merger } => {
            let out = async_merge(&read_set(&current)?, &read_set(&merger)?)?;
            println!("[instructions]");
            print_commands(out.instructions.iter());
            println!("[carried forward]");
            print_commands(&out.carried_forward);
            println!("[discarded]");
            print_commands(&out.discarded);
        }
        Cmd::Bench { s, t, users, repeats, csv } => {
            let cfg = BenchConfig::new(s, t, users, repeats).map_err(|e| anyhow!("BenchConfigError: {e}"))?;
            let records = run_bench(&cfg);
            match csv {
                Some(path) => {
                    let file = fs::File::create(&path).with_context(|| format!("IoError: cannot write {}", path.display()))?;
                    write_csv(&records, file)?;
                }
                None => write_csv(&records, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e:#}");
            ExitCode::from(1)
        }
    }
}
