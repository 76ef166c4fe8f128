//! Flat `key = value` configuration, sectioned by `[command]` headers.
//!
//! ```text
//! # comment
//! [synth]
//! freqs = 3, 10, 32
//! layer = 0.5, 2.0, 0.6, 3e-6, 3.4
//! layer = 2.0, 4.0, 0.8, 6e-6, 3.4
//! ```
//!
//! Keys marked repeatable (`layer`, `inclusion`, `roi`, ...) may appear more
//! than once; any other key appearing twice, or a key no command reads, is
//! an error.

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
pub struct ConfigFile {
    path: PathBuf,
    dir: PathBuf,
    sections: Vec<Section>,
    hash: String,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::MissingPath(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// An empty configuration: every command runs on its defaults.
    pub fn empty() -> Self {
        Self::parse("", Path::new("<defaults>")).expect("empty text parses")
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        let err = |line: usize, msg: String| CliError::Config {
            path: path.to_path_buf(),
            line,
            msg,
        };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("unterminated section header '{content}'")))?
                    .trim();
                if name.is_empty() {
                    return Err(err(line, "empty section name".into()));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(err(line, format!("section [{name}] appears twice")));
                }
                sections.push(Section {
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{content}'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err(line, "missing key before '='".into()));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| err(line, format!("key '{key}' appears before any [section] header")))?;
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            path: path.to_path_buf(),
            dir,
            sections,
            hash,
        })
    }

    /// Hex SHA-256 of the file bytes, extended by any command-line override.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Folds a command-line override into the hash so outputs produced with
    /// and without it are distinguishable.
    pub fn with_override(mut self, tag: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.hash.as_bytes());
        h.update(tag.as_bytes());
        self.hash = format!("{:x}", h.finalize());
        self
    }

    pub fn section(&self, name: &str) -> SectionReader<'_> {
        let entries: Vec<&Entry> = self
            .sections
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.entries.iter().collect())
            .unwrap_or_default();
        let used = RefCell::new(vec![false; entries.len()]);
        SectionReader {
            cfg: self,
            name: name.to_string(),
            entries,
            used,
        }
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().map(|s| s.name.as_str())
    }
}

/// Typed access to one section; tracks which keys were read so that
/// [`SectionReader::finish`] can reject unknown ones.
pub struct SectionReader<'a> {
    cfg: &'a ConfigFile,
    name: String,
    entries: Vec<&'a Entry>,
    used: RefCell<Vec<bool>>,
}

impl<'a> SectionReader<'a> {
    pub fn err(&self, line: usize, msg: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.cfg.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Line of the first occurrence of `key`, or 0.
    pub fn line(&self, key: &str) -> usize {
        self.entries.iter().find(|e| e.key == key).map_or(0, |e| e.line)
    }

    /// Every `(value, line)` for a repeatable key, in file order.
    pub fn all(&self, key: &str) -> Vec<(&'a str, usize)> {
        let mut used = self.used.borrow_mut();
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.key == key)
            .map(|(k, e)| {
                used[k] = true;
                (e.value.as_str(), e.line)
            })
            .collect()
    }

    pub fn raw(&self, key: &str) -> Result<Option<(&'a str, usize)>> {
        let hits = self.all(key);
        match hits.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            [_, second, ..] => Err(self.err(second.1, format!("[{}] key '{key}' given more than once", self.name))),
        }
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key)? {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.err(line, format!("[{}] {key}: cannot parse '{v}': {e}", self.name))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.opt(key)?
            .ok_or_else(|| self.err(0, format!("[{}] missing required key '{key}'", self.name)))
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key)? {
            None => Ok(None),
            Some((v, line)) => parse_list(v).map(Some).map_err(|m| self.err(line, format!("[{}] {key}: {m}", self.name))),
        }
    }

    /// Comma-separated strings (empty items dropped).
    pub fn words(&self, key: &str) -> Result<Option<Vec<String>>> {
        Ok(self.raw(key)?.map(|(v, _)| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        }))
    }

    /// A path relative to the config file's directory. Input paths must exist.
    pub fn input_path(&self, key: &str) -> Result<Option<PathBuf>> {
        let line = self.raw(key)?.map_or(0, |(_, l)| l);
        match self.input_paths(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(v.into_iter().next()),
            Some(_) => Err(self.err(line, format!("[{}] {key}: expected a single path", self.name))),
        }
    }

    /// Comma-separated input paths, each checked for existence.
    pub fn input_paths(&self, key: &str) -> Result<Option<Vec<PathBuf>>> {
        let Some(words) = self.words(key)? else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(words.len());
        for w in words {
            let p = self.resolve(&w);
            if !p.exists() {
                return Err(CliError::MissingPath(p));
            }
            out.push(p);
        }
        Ok(Some(out))
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.cfg.dir.join(p)
        }
    }

    /// Errors on any key that no accessor read.
    pub fn finish(self) -> Result<()> {
        let used = self.used.borrow();
        if let Some(k) = used.iter().position(|u| !u) {
            let e = self.entries[k];
            return Err(self.err(e.line, format!("[{}] unknown key '{}'", self.name, e.key)));
        }
        Ok(())
    }
}

pub fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("cannot parse '{s}': {e}")))
        .collect()
}
