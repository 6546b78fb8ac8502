//! Flat `key = value` configuration text.
//!
//! One assignment per line, `#` starts a comment line, string values may be
//! double-quoted. Written files quote strings, so they are also valid TOML.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvMap {
    source: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl KvMap {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut map = Self::new(source);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, i + 1, format!("expected `key = value`, found `{line}`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(source, i + 1, "empty key"));
            }
            let v = v.trim();
            let v = v
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(v);
            if map.entries.insert(k.to_string(), (v.to_string(), i + 1)).is_some() {
                return Err(Error::parse(source, i + 1, format!("duplicate key `{k}`")));
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Typed lookup; a present but malformed value is a parse error at its line.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                Error::parse(&self.source, *line, format!("bad value `{v}` for `{key}`"))
            }),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => {
                if v.trim().is_empty() {
                    return Ok(Some(vec![]));
                }
                v.split(',')
                    .map(|s| s.trim().parse())
                    .collect::<std::result::Result<Vec<T>, _>>()
                    .map(Some)
                    .map_err(|_| Error::parse(&self.source, *line, format!("bad list `{v}` for `{key}`")))
            }
        }
    }

    /// Fails on any key outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        for (k, (_, line)) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(Error::parse(&self.source, *line, format!("unknown key `{k}`")));
            }
        }
        Ok(())
    }

    /// Later entries override earlier ones.
    pub fn merge(&mut self, other: &KvMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, (v, _)) in &self.entries {
            if v.parse::<f64>().is_ok() || v == "true" || v == "false" {
                s.push_str(&format!("{k} = {v}\n"));
            } else {
                s.push_str(&format!("{k} = \"{v}\"\n"));
            }
        }
        s
    }
}

pub fn join_list<T: Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_roundtrip() {
        let text = "# comment\nsteps = 100\nname = \"a b\"\nwidths = 1,2,3\n";
        let m = KvMap::parse(text, "c").unwrap();
        assert_eq!(m.get::<u64>("steps").unwrap(), Some(100));
        assert_eq!(m.get_str("name"), Some("a b"));
        assert_eq!(m.get_list::<usize>("widths").unwrap(), Some(vec![1, 2, 3]));
        let again = KvMap::parse(&m.to_text(), "c").unwrap();
        assert_eq!(again.get_str("name"), Some("a b"));
        assert_eq!(again.get_list::<usize>("widths").unwrap(), Some(vec![1, 2, 3]));
    }

    #[test]
    fn errors_name_the_line() {
        let m = KvMap::parse("a = 1\nb = x\n", "cfg").unwrap();
        match m.get::<f64>("b") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(KvMap::parse("a 1\n", "cfg"), Err(Error::Parse { line: 1, .. })));
        assert!(m.check_known(&["a"]).is_err());
    }
}
