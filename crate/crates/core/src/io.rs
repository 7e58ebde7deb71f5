//! Shared file plumbing: the `# key=value ...` header line carried by every
//! CSV artifact, content hashing, and small CSV helpers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Ordered key/value pairs rendered as the first line of a CSV artifact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(kind: &str) -> Self {
        let mut h = Header::default();
        h.set("schema", SCHEMA_VERSION);
        h.set("kind", kind);
        h
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace(char::is_whitespace, "_");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::format("artifact header", format!("missing key `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::format("artifact header", format!("cannot parse `{key}={raw}`")))
    }

    pub fn render(&self) -> String {
        let mut line = String::from("#");
        for (k, v) in &self.entries {
            let _ = write!(line, " {k}={v}");
        }
        line
    }

    pub fn parse(line: &str) -> Result<Self> {
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| Error::format("artifact header", "first line must start with `#`"))?;
        let mut h = Header::default();
        for token in body.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::format("artifact header", format!("token `{token}` is not key=value")))?;
            h.entries.push((k.to_string(), v.to_string()));
        }
        Ok(h)
    }
}

/// First 64 bits of SHA-256, as 16 lowercase hex digits.
pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(content_hash(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// A parsed CSV file: optional header comment, column names, string rows.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Option<Header>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str, what: &str) -> Result<Self> {
        let mut header = None;
        let mut body = text;
        if text.starts_with('#') {
            let end = text.find('\n').unwrap_or(text.len());
            header = Some(Header::parse(text[..end].trim_end())?);
            body = &text[end..];
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(Error::format(what, "missing column header"));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(CsvTable { header, columns, rows })
    }

    pub fn read(path: &Path, what: &str) -> Result<Self> {
        Self::parse(&read_file(path)?, what)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn parse_f64(raw: &str, what: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::format(what, format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::format(what, format!("`{raw}` is not finite")));
    }
    Ok(v)
}

/// Renders rows of numbers under `header`; values use the shortest
/// round-trip decimal form.
pub fn render_csv(header: Option<&Header>, columns: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.render());
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
