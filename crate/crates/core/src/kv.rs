//! Plain-text `key = value` files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys
//! may repeat; callers decide whether that is allowed.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    /// 1-based source line.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KvFile {
    path: PathBuf,
    entries: Vec<KvEntry>,
}

impl KvFile {
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(&path, n + 1, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(&path, n + 1, "empty key"));
            }
            entries.push(KvEntry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: n + 1,
            });
        }
        Ok(Self { path, entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[KvEntry] {
        &self.entries
    }

    /// The single entry for `key`; repeated keys are an error.
    pub fn get(&self, key: &str) -> Result<Option<&KvEntry>> {
        let mut found = self.entries.iter().filter(|e| e.key == key);
        let first = found.next();
        if let Some(dup) = found.next() {
            return Err(self.error(dup, format!("duplicate key `{key}`")));
        }
        Ok(first)
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a KvEntry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// Parses the value of `key` if present.
    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.map(|e| self.parse_value(e)).transpose()
    }

    pub fn parse_value<T: FromStr>(&self, entry: &KvEntry) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        entry
            .value
            .parse()
            .map_err(|e| self.error(entry, format!("bad value for `{}`: {e}", entry.key)))
    }

    /// Whitespace-separated floats; `count` bounds the accepted lengths.
    pub fn floats(&self, entry: &KvEntry, count: &[usize]) -> Result<Vec<f64>> {
        let values = entry
            .value
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.error(entry, format!("bad number in `{}`: {e}", entry.key)))?;
        if !count.contains(&values.len()) {
            return Err(self.error(
                entry,
                format!("`{}` takes {count:?} numbers, got {}", entry.key, values.len()),
            ));
        }
        Ok(values)
    }

    /// Rejects keys that are not in `known` (prefix match for entries
    /// ending in `.`).
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for e in &self.entries {
            let ok = known.iter().any(|k| {
                if k.ends_with('.') {
                    e.key.starts_with(k)
                } else {
                    e.key == *k
                }
            });
            if !ok {
                return Err(self.error(e, format!("unknown key `{}`", e.key)));
            }
        }
        Ok(())
    }

    pub fn error(&self, entry: &KvEntry, message: impl Into<String>) -> Error {
        Error::parse(&self.path, entry.line, message)
    }

    pub fn missing(&self, key: &str) -> Error {
        Error::InvalidParameter(format!("{}: missing key `{key}`", self.path.display()))
    }
}

/// Splits `key=value` override strings as given on a command line.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::InvalidParameter(format!("override `{arg}` is not `key=value`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lines() {
        let kv = KvFile::parse("# header\n\na = 1\nb=two # trailing\n  c =  3 4  \n", "t.kv").unwrap();
        let keys: Vec<_> = kv.entries().iter().map(|e| (e.key.as_str(), e.value.as_str(), e.line)).collect();
        assert_eq!(keys, [("a", "1", 3), ("b", "two", 4), ("c", "3 4", 5)]);
        assert_eq!(kv.value::<u32>("a").unwrap(), Some(1));
        assert_eq!(kv.value::<u32>("missing").unwrap(), None);
        let c = kv.get("c").unwrap().unwrap();
        assert_eq!(kv.floats(c, &[2]).unwrap(), [3.0, 4.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = KvFile::parse("a = 1\nnot a pair\n", "x.kv").unwrap_err();
        assert!(err.to_string().contains("x.kv:2"), "{err}");

        let kv = KvFile::parse("a = 1\na = 2\n", "x.kv").unwrap();
        assert!(kv.get("a").unwrap_err().to_string().contains(":2"));

        let kv = KvFile::parse("n = 1.5\nv = 1 2\nzz = 0\n", "x.kv").unwrap();
        assert!(kv.value::<u32>("n").is_err());
        assert!(kv.floats(kv.get("v").unwrap().unwrap(), &[3]).is_err());
        let err = kv.check_keys(&["n", "v"]).unwrap_err();
        assert!(err.to_string().contains(":3"));
        kv.check_keys(&["n", "v", "z"]).unwrap_err();
        kv.check_keys(&["n", "v", "zz"]).unwrap();
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("sgm.p1 = 9").unwrap(), ("sgm.p1".into(), "9".into()));
        assert!(parse_override("nope").is_err());
        assert!(parse_override("=3").is_err());
    }
}
