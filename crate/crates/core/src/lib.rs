//! Reconciliation of diverged filesystem replicas.
//!
//! Each replica's changes since a common starting point are summarized as a
//! canonical command set: at most one `(node, input, output)` command per
//! node, closed under the parent/child execution order. Sets are checked for
//! joint refluence (they all apply to some common filesystem), merged into a
//! maximal conflict-free subset of their union, and turned into per-replica
//! rollback and apply sequences that bring every replica to the same state.
//!
//! ```
//! use fsreconcile::{canonical::CanonicalSet, command::Command, fsmodel::{Path, Value}};
//! use fsreconcile::merge::greedy_merger;
//!
//! let p = Path::parse("/notes").unwrap();
//! let a = CanonicalSet::new([Command::new(p.clone(), Value::Empty, Value::file("one"))]).unwrap();
//! let b = CanonicalSet::new([Command::new(p, Value::Empty, Value::file("two"))]).unwrap();
//! let merged = greedy_merger(&[a.clone(), b]).unwrap();
//! assert_eq!(merged.commands(), &a);
//! ```

pub mod bench;
pub mod canonical;
pub mod command;
pub mod fsmodel;
pub mod merge;
pub mod reconcile;
pub mod refluence;
pub mod text;

pub use canonical::{canonize, check_canonical, is_canonical, order_canonical, CanonicalSet};
pub use command::{conflicts, order_rel, Command, CommandKind, CommandSequence, ReplicaId};
pub use fsmodel::{ApplyError, Filesystem, Path, Value, ValueType};
pub use merge::{enumerate_mergers, generate_merger, greedy_merger, merger_extending, DecisionOracle, Merger};
pub use reconcile::{async_merge, diff, make_plan, verify_convergence, AsyncOutcome, SyncPlan};
pub use refluence::{check_jointly_refluent, is_jointly_refluent};
