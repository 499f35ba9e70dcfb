//! Single-node commands, their classification and the pairwise relations
//! used by every algorithm: execution order and conflict.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Deref;

use crate::fsmodel::{Filesystem, Path, Value, ValueType};

/// Replica index a command was submitted by.
pub type ReplicaId = u32;

/// `(node, input, output)` with optional origin metadata.
///
/// Equality, hashing and ordering ignore `origin`: the same triple submitted
/// by two replicas is one command.
#[derive(Clone)]
pub struct Command {
    pub node: Path,
    pub input: Value,
    pub output: Value,
    pub origin: Option<ReplicaId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommandKind {
    Null,
    Constructor,
    Destructor,
    Edit,
}

impl Command {
    pub fn new(node: Path, input: Value, output: Value) -> Self {
        Command { node, input, output, origin: None }
    }

    pub fn with_origin(mut self, origin: ReplicaId) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn input_type(&self) -> ValueType {
        self.input.value_type()
    }

    pub fn output_type(&self) -> ValueType {
        self.output.value_type()
    }

    pub fn kind(&self) -> CommandKind {
        if self.input == self.output {
            CommandKind::Null
        } else {
            match self.input_type().cmp(&self.output_type()) {
                std::cmp::Ordering::Less => CommandKind::Constructor,
                std::cmp::Ordering::Greater => CommandKind::Destructor,
                std::cmp::Ordering::Equal => CommandKind::Edit,
            }
        }
    }

    pub fn is_null(&self) -> bool {
        self.input == self.output
    }

    pub fn is_constructor(&self) -> bool {
        self.input_type() < self.output_type()
    }

    pub fn is_destructor(&self) -> bool {
        self.input_type() > self.output_type()
    }

    pub fn inverse(&self) -> Command {
        Command {
            node: self.node.clone(),
            input: self.output.clone(),
            output: self.input.clone(),
            origin: self.origin,
        }
    }
}

impl PartialEq for Command {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node && self.input == other.input && self.output == other.output
    }
}

impl Eq for Command {}

impl Hash for Command {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.node.hash(state);
        self.input.hash(state);
        self.output.hash(state);
    }
}

impl Ord for Command {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.node
            .cmp(&other.node)
            .then_with(|| self.input.cmp(&other.input))
            .then_with(|| self.output.cmp(&other.output))
    }
}

impl PartialOrd for Command {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {:?}, {:?}>", self.node, self.input, self.output)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn is_dir_or_file(t: ValueType) -> bool {
    t != ValueType::Empty
}

fn is_file_or_empty(t: ValueType) -> bool {
    t != ValueType::Directory
}

/// `s` must run before `t`.
///
/// Either `s = (n, DF, E)` and `t = (parent n, D, FE)` (delete children before
/// the directory) or `s = (parent n, EF, D)` and `t = (n, E, FD)` (create the
/// directory before its children).
pub fn order_rel(s: &Command, t: &Command) -> bool {
    let bottom_up = t.node.is_parent_of(&s.node)
        && !t.node.is_root()
        && is_dir_or_file(s.input_type())
        && s.output_type() == ValueType::Empty
        && t.input_type() == ValueType::Directory
        && is_file_or_empty(t.output_type());
    let top_down = s.node.is_parent_of(&t.node)
        && !s.node.is_root()
        && is_file_or_empty(s.input_type())
        && s.output_type() == ValueType::Directory
        && t.input_type() == ValueType::Empty
        && is_dir_or_file(t.output_type());
    bottom_up || top_down
}

/// Conflict: different commands on one node, or an upper command producing a
/// non-directory above a lower command producing non-empty content.
pub fn conflicts(s: &Command, t: &Command) -> bool {
    if s.node == t.node {
        return s != t;
    }
    let above = |u: &Command, l: &Command| {
        u.node.is_ancestor_of(&l.node) && !u.output.is_dir() && !l.output.is_empty()
    };
    above(s, t) || above(t, s)
}

/// Ordered list of commands. May be breaking; that is detected on application.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct CommandSequence(Vec<Command>);

impl CommandSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inverses of the commands in reverse order.
    pub fn inverse(&self) -> CommandSequence {
        CommandSequence(self.0.iter().rev().map(Command::inverse).collect())
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &CommandSequence) -> CommandSequence {
        let mut items = self.0.clone();
        items.extend(other.0.iter().cloned());
        CommandSequence(items)
    }

    pub fn push(&mut self, cmd: Command) {
        self.0.push(cmd);
    }

    pub fn into_vec(self) -> Vec<Command> {
        self.0
    }

    pub fn as_slice(&self) -> &[Command] {
        &self.0
    }

    /// Whether the sequence honors the execution order relation.
    pub fn honors_order(&self) -> bool {
        // Only parent-child pairs can be related; a quadratic scan is fine
        // for the sizes this is used on (tests and validation).
        self.0.iter().enumerate().all(|(i, later)| {
            self.0[i + 1..].iter().all(|after| !order_rel(after, later))
        })
    }
}

impl Deref for CommandSequence {
    type Target = [Command];

    fn deref(&self) -> &[Command] {
        &self.0
    }
}

impl From<Vec<Command>> for CommandSequence {
    fn from(v: Vec<Command>) -> Self {
        CommandSequence(v)
    }
}

impl FromIterator<Command> for CommandSequence {
    fn from_iter<I: IntoIterator<Item = Command>>(iter: I) -> Self {
        CommandSequence(iter.into_iter().collect())
    }
}

impl IntoIterator for CommandSequence {
    type Item = Command;
    type IntoIter = std::vec::IntoIter<Command>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a CommandSequence {
    type Item = &'a Command;
    type IntoIter = std::slice::Iter<'a, Command>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Debug for CommandSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Sampled semantic equality: on every sample both sequences break, or both
/// succeed with the same result.
pub fn semantically_equal_on(a: &[Command], b: &[Command], samples: &[Filesystem]) -> bool {
    samples.iter().all(|fs| {
        match (fs.apply_all(a), fs.apply_all(b)) {
            (Ok(x), Ok(y)) => x == y,
            (Err(_), Err(_)) => true,
            _ => false,
        }
    })
}

/// Sampled semantic extension: wherever `a` succeeds, `b` succeeds with the
/// same result.
pub fn semantically_extends_on(a: &[Command], b: &[Command], samples: &[Filesystem]) -> bool {
    samples.iter().all(|fs| match fs.apply_all(a) {
        Ok(x) => fs.apply_all(b).map(|y| y == x).unwrap_or(false),
        Err(_) => true,
    })
}
