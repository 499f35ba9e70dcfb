//! Line-oriented text formats.
//!
//! * Filesystem snapshot: `<path>\t<value>` per stored node.
//! * Commands: `<path>\t<input>\t<output>[\t<origin>]`.
//! * Decision script: one zero-based index per line.
//!
//! Values are `E`, `D` or `F:<base64 content>`. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use thiserror::Error;

use crate::command::{Command, ReplicaId};
use crate::fsmodel::{Filesystem, Path, Value};
use crate::reconcile::SyncPlan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ParseError: line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn format_value(v: &Value) -> String {
    match v {
        Value::Empty => "E".to_string(),
        Value::Directory => "D".to_string(),
        Value::File(bytes) => format!("F:{}", STANDARD.encode(bytes)),
    }
}

pub fn parse_value(s: &str) -> Result<Value, String> {
    match s {
        "E" => Ok(Value::Empty),
        "D" => Ok(Value::Directory),
        _ => {
            let b64 = s.strip_prefix("F:").ok_or_else(|| format!("bad value {s:?}"))?;
            STANDARD.decode(b64).map(Value::file).map_err(|e| format!("bad file content: {e}"))
        }
    }
}

fn parse_node(s: &str) -> Result<Path, String> {
    let p = Path::parse(s).map_err(|e| e.to_string())?;
    if p.is_root() {
        return Err("the root cannot be named".to_string());
    }
    Ok(p)
}

pub fn parse_filesystem(text: &str) -> Result<Filesystem, ParseError> {
    let mut entries = Vec::new();
    for (n, line) in content_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        let [path, value] = fields[..] else { return Err(err(n, "expected <path>\\t<value>")) };
        let path = parse_node(path).map_err(|m| err(n, m))?;
        let value = parse_value(value).map_err(|m| err(n, m))?;
        if value.is_empty() {
            return Err(err(n, "snapshots list non-empty nodes only"));
        }
        entries.push((path, value));
    }
    let len = entries.len();
    let fs = Filesystem::from_entries(entries);
    if fs.len() != len {
        return Err(err(0, "duplicate path"));
    }
    if !fs.is_valid() {
        return Err(err(0, "not a tree: some node lacks a directory parent"));
    }
    Ok(fs)
}

pub fn format_filesystem(fs: &Filesystem) -> String {
    let mut out = String::new();
    for (p, v) in fs.entries() {
        let _ = writeln!(out, "{p}\t{}", format_value(v));
    }
    out
}

pub fn parse_commands(text: &str) -> Result<Vec<Command>, ParseError> {
    let mut out = Vec::new();
    for (n, line) in content_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(err(n, "expected <path>\\t<input>\\t<output>[\\t<origin>]"));
        }
        let node = parse_node(fields[0]).map_err(|m| err(n, m))?;
        let input = parse_value(fields[1]).map_err(|m| err(n, m))?;
        let output = parse_value(fields[2]).map_err(|m| err(n, m))?;
        let mut cmd = Command::new(node, input, output);
        if let Some(origin) = fields.get(3) {
            let origin: ReplicaId = origin.parse().map_err(|_| err(n, format!("bad origin {origin:?}")))?;
            cmd = cmd.with_origin(origin);
        }
        out.push(cmd);
    }
    Ok(out)
}

pub fn format_command(c: &Command) -> String {
    let mut s = format!("{}\t{}\t{}", c.node, format_value(&c.input), format_value(&c.output));
    if let Some(o) = c.origin {
        let _ = write!(s, "\t{o}");
    }
    s
}

pub fn format_commands<'a>(cmds: impl IntoIterator<Item = &'a Command>) -> String {
    cmds.into_iter().map(|c| format_command(c) + "\n").collect()
}

pub fn parse_script(text: &str) -> Result<Vec<usize>, ParseError> {
    content_lines(text)
        .map(|(n, l)| l.trim().parse().map_err(|_| err(n, format!("bad choice {l:?}"))))
        .collect()
}

/// `[rollback i]`, `[apply i]` and `[discarded i]` blocks per replica.
pub fn format_plan(plan: &SyncPlan) -> String {
    let mut out = String::new();
    for (i, r) in plan.replicas.iter().enumerate() {
        let _ = writeln!(out, "[rollback {i}]");
        out += &format_commands(r.rollback.iter());
        let _ = writeln!(out, "[apply {i}]");
        out += &format_commands(r.apply.iter());
        let _ = writeln!(out, "[discarded {i}]");
        out += &format_commands(r.discarded.iter());
    }
    out
}

/// Splits `[header]` sectioned text into named blocks.
pub fn parse_sections(text: &str) -> Result<Vec<(String, Vec<Command>)>, ParseError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.push((name.to_string(), String::new()));
        } else if let Some((_, body)) = out.last_mut() {
            body.push_str(line);
            body.push('\n');
        } else if !line.trim().is_empty() && !line.starts_with('#') {
            return Err(err(n + 1, "content before the first section"));
        }
    }
    out.into_iter().map(|(name, body)| Ok((name, parse_commands(&body)?))).collect()
}
