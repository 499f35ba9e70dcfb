//! Namespace, node values and the filesystem model.
//!
//! A [`Path`] names a node of the namespace. Paths are rendered as
//! `/seg1/seg2`, the empty component list is the root `/`. The root is a
//! virtual node: it never stores a value, and first-level nodes behave as the
//! roots of independent trees.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::command::{Command, CommandSequence};

pub const SEPARATOR: u8 = b'/';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path must start with '/': {0:?}")]
    NotAbsolute(String),
    #[error("empty path segment in {0:?}")]
    EmptySegment(String),
    #[error("path segment contains a separator byte")]
    SeparatorInSegment,
}

/// Node identifier.
///
/// Stored as the rendered byte string without the trailing separator, so the
/// root is the empty string and `/a/b` is `b"/a/b"`. Ordering is
/// component-wise with a proper prefix sorting first, which makes every
/// subtree a contiguous run directly after its top node.
#[derive(Clone)]
pub struct Path(Arc<[u8]>);

impl Path {
    pub fn root() -> Self {
        Path(Arc::from(&b""[..]))
    }

    /// Builds a path from its segments.
    pub fn from_segments<I, S>(segments: I) -> Result<Self, PathError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut bytes = Vec::new();
        for seg in segments {
            let seg = seg.as_ref();
            if seg.is_empty() {
                return Err(PathError::EmptySegment(String::from_utf8_lossy(&bytes).into_owned()));
            }
            if seg.contains(&SEPARATOR) {
                return Err(PathError::SeparatorInSegment);
            }
            bytes.push(SEPARATOR);
            bytes.extend_from_slice(seg);
        }
        Ok(Path(Arc::from(bytes)))
    }

    /// Parses `/a/b/c`; `/` is the root.
    pub fn parse(text: &str) -> Result<Self, PathError> {
        if text == "/" {
            return Ok(Path::root());
        }
        let rest = text
            .strip_prefix('/')
            .ok_or_else(|| PathError::NotAbsolute(text.to_string()))?;
        if rest.split('/').any(str::is_empty) {
            return Err(PathError::EmptySegment(text.to_string()));
        }
        Ok(Path(Arc::from(text.as_bytes())))
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = &[u8]> + Clone {
        self.0.split(|b| *b == SEPARATOR).skip(1)
    }

    pub fn depth(&self) -> usize {
        self.0.iter().filter(|b| **b == SEPARATOR).count()
    }

    /// Parent node; `None` only for the root.
    pub fn parent(&self) -> Option<Path> {
        if self.is_root() {
            return None;
        }
        let cut = self.0.iter().rposition(|b| *b == SEPARATOR).unwrap_or(0);
        Some(Path(Arc::from(&self.0[..cut])))
    }

    /// `self` is strictly above `other`.
    pub fn is_ancestor_of(&self, other: &Path) -> bool {
        other.0.len() > self.0.len()
            && other.0.starts_with(&self.0)
            && other.0[self.0.len()] == SEPARATOR
    }

    /// `self` is the direct parent of `other`.
    pub fn is_parent_of(&self, other: &Path) -> bool {
        self.is_ancestor_of(other) && !other.0[self.0.len() + 1..].contains(&SEPARATOR)
    }

    pub fn is_comparable(&self, other: &Path) -> bool {
        self == other || self.is_ancestor_of(other) || other.is_ancestor_of(self)
    }

    pub fn child(&self, segment: impl AsRef<[u8]>) -> Result<Path, PathError> {
        let seg = segment.as_ref();
        if seg.is_empty() {
            return Err(PathError::EmptySegment(self.to_string()));
        }
        if seg.contains(&SEPARATOR) {
            return Err(PathError::SeparatorInSegment);
        }
        let mut bytes = self.0.to_vec();
        bytes.push(SEPARATOR);
        bytes.extend_from_slice(seg);
        Ok(Path(Arc::from(bytes)))
    }

    /// Ancestors from the parent upwards, excluding the root.
    pub fn proper_ancestors(&self) -> impl Iterator<Item = Path> {
        std::iter::successors(self.parent(), Path::parent).filter(|p| !p.is_root())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Same path in a fresh allocation.
    pub(crate) fn copied(&self) -> Path {
        Path(Arc::from(&self.0[..]))
    }
}

impl PartialEq for Path {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Path {}

impl Hash for Path {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        // Byte comparison agrees with component order up to the first byte
        // where the two differ; only a separator on either side needs care.
        let (a, b) = (&self.0[..], &other.0[..]);
        let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        match (a.get(common), b.get(common)) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(&x), Some(&y)) => match (x == SEPARATOR, y == SEPARATOR) {
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                _ => x.cmp(&y),
            },
        }
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            f.write_str("/")
        } else {
            f.write_str(&String::from_utf8_lossy(&self.0))
        }
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Path({self})")
    }
}

/// Type of a value, ordered `Empty < File < Directory`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    Empty,
    File,
    Directory,
}

/// Content stored at a node. File contents are opaque bytes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Empty,
    File(Arc<[u8]>),
    Directory,
}

impl Value {
    pub fn file(content: impl AsRef<[u8]>) -> Self {
        Value::File(Arc::from(content.as_ref()))
    }

    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Empty => ValueType::Empty,
            Value::File(_) => ValueType::File,
            Value::Directory => ValueType::Directory,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Value::Empty)
    }

    pub fn is_dir(&self) -> bool {
        matches!(self, Value::Directory)
    }

    pub fn is_file(&self) -> bool {
        matches!(self, Value::File(_))
    }

    /// Same value; file contents in a fresh allocation.
    pub(crate) fn copied(&self) -> Value {
        match self {
            Value::File(c) => Value::file(&c[..]),
            v => v.clone(),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Empty => f.write_str("E"),
            Value::Directory => f.write_str("D"),
            Value::File(c) => write!(f, "F({})", String::from_utf8_lossy(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("PreconditionFailed: {node} holds {found:?}, command expects {expected:?}")]
    PreconditionFailed { node: Path, expected: Value, found: Value },
    #[error("TreeBroken: applying the command at {node} violates the tree property")]
    TreeBroken { node: Path },
}

impl ApplyError {
    pub fn node(&self) -> &Path {
        match self {
            ApplyError::PreconditionFailed { node, .. } | ApplyError::TreeBroken { node } => node,
        }
    }
}

/// A command of a sequence broke the filesystem.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{source} (command #{index})")]
pub struct SequenceError {
    pub index: usize,
    pub source: ApplyError,
}

/// Finite filesystem. Only non-Empty entries are stored.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Filesystem {
    entries: BTreeMap<Path, Value>,
}

impl Filesystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a filesystem without validating the tree property.
    pub fn from_entries<I: IntoIterator<Item = (Path, Value)>>(entries: I) -> Self {
        let entries = entries.into_iter().filter(|(p, v)| !v.is_empty() && !p.is_root()).collect();
        Filesystem { entries }
    }

    pub fn read(&self, path: &Path) -> Value {
        self.entries.get(path).cloned().unwrap_or(Value::Empty)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Path, &Value)> {
        self.entries.iter()
    }

    /// Sets a value without any checks. Storing Empty removes the entry.
    pub fn set_unchecked(&mut self, path: Path, value: Value) {
        if value.is_empty() {
            self.entries.remove(&path);
        } else {
            self.entries.insert(path, value);
        }
    }

    /// Stored (non-Empty) entries strictly below `path`.
    pub fn descendants<'a>(&'a self, path: &'a Path) -> impl Iterator<Item = (&'a Path, &'a Value)> + 'a {
        use std::ops::Bound;
        self.entries
            .range((Bound::Excluded(path), Bound::Unbounded))
            .take_while(move |(p, _)| path.is_ancestor_of(p))
    }

    fn parent_is_dir(&self, path: &Path) -> bool {
        match path.parent() {
            None => false,
            Some(parent) if parent.is_root() => true,
            Some(parent) => self.read(&parent).is_dir(),
        }
    }

    /// Tree property: every stored non-root node sits under a directory.
    pub fn is_valid(&self) -> bool {
        self.entries.keys().all(|p| self.parent_is_dir(p))
    }

    /// Applies one command, returning the updated filesystem.
    pub fn apply_command(&self, cmd: &Command) -> Result<Filesystem, ApplyError> {
        let mut next = self.clone();
        next.apply_in_place(cmd)?;
        Ok(next)
    }

    /// In-place variant; on error `self` is left unchanged.
    pub fn apply_in_place(&mut self, cmd: &Command) -> Result<(), ApplyError> {
        let node = &cmd.node;
        let found = self.read(node);
        if found != cmd.input {
            return Err(ApplyError::PreconditionFailed {
                node: node.clone(),
                expected: cmd.input.clone(),
                found,
            });
        }
        let broken = || ApplyError::TreeBroken { node: node.clone() };
        if node.is_root() {
            return Err(broken());
        }
        if !cmd.output.is_empty() && !self.parent_is_dir(node) {
            return Err(broken());
        }
        if !cmd.output.is_dir() && self.descendants(node).next().is_some() {
            return Err(broken());
        }
        self.set_unchecked(node.clone(), cmd.output.clone());
        Ok(())
    }

    /// Folds commands left to right.
    pub fn apply_sequence(&self, seq: &CommandSequence) -> Result<Filesystem, SequenceError> {
        self.apply_all(seq.iter())
    }

    pub fn apply_all<'a, I>(&self, cmds: I) -> Result<Filesystem, SequenceError>
    where
        I: IntoIterator<Item = &'a Command>,
    {
        let mut fs = self.clone();
        for (index, cmd) in cmds.into_iter().enumerate() {
            fs.apply_in_place(cmd).map_err(|source| SequenceError { index, source })?;
        }
        Ok(fs)
    }
}

impl fmt::Debug for Filesystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(p, v)| (p.to_string(), v))).finish()
    }
}

impl FromIterator<(Path, Value)> for Filesystem {
    fn from_iter<I: IntoIterator<Item = (Path, Value)>>(iter: I) -> Self {
        Filesystem::from_entries(iter)
    }
}
