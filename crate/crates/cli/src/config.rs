//! Sectioned key-value configuration layered over the built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use sha2::{Digest, Sha256};

pub const DEFAULTS: &str = include_str!("defaults.ini");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: unknown section [{section}]")]
    UnknownSection { origin: String, section: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("key `{key}` exists in several sections ({sections}); write it as section.key")]
    Ambiguous { key: String, sections: String },
    #[error("`{key}` = \"{value}\": expected {expected}")]
    BadValue { key: String, value: String, expected: &'static str },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T, E = ConfigError> = std::result::Result<T, E>;

/// Resolved configuration: every section and key of the defaults, with
/// user values applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn parse(text: &str, origin: &str) -> Result<Vec<(String, String, String)>> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Parse { origin: origin.into(), message: e.to_string() })?;
    let mut out = Vec::new();
    for (section, props) in ini.iter() {
        for (key, value) in props.iter() {
            let Some(section) = section else {
                return Err(ConfigError::Parse { origin: origin.into(), message: format!("`{key}` appears before any [section]") });
            };
            out.push((section.to_string(), key.to_string(), value.trim().to_string()));
        }
    }
    Ok(out)
}

impl Config {
    pub fn defaults() -> Self {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (s, k, v) in parse(DEFAULTS, "defaults").expect("built-in defaults parse") {
            sections.entry(s).or_default().insert(k, v);
        }
        Self { sections }
    }

    /// Defaults, or a file layered over them. `defaults` names the
    /// built-in set.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::defaults();
        if let Some(p) = path.filter(|p| p.as_os_str() != "defaults") {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
            cfg.merge(&text, &p.display().to_string())?;
        }
        Ok(cfg)
    }

    pub fn merge(&mut self, text: &str, origin: &str) -> Result<()> {
        for (s, k, v) in parse(text, origin)? {
            let Some(section) = self.sections.get_mut(&s) else {
                return Err(ConfigError::UnknownSection { origin: origin.into(), section: s });
            };
            let Some(slot) = section.get_mut(&k) else {
                return Err(ConfigError::UnknownKey { origin: origin.into(), key: format!("{s}.{k}") });
            };
            *slot = v;
        }
        Ok(())
    }

    /// Applies `key=value` or `section.key=value`. A bare key is looked up
    /// in `home` first, then in every other section.
    pub fn set(&mut self, assignment: &str, home: &str) -> Result<()> {
        let origin = "--set";
        let (lhs, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { origin: origin.into(), message: format!("`{assignment}` is not key=value") })?;
        let (lhs, value) = (lhs.trim(), value.trim().to_string());
        let (section, key) = match lhs.split_once('.') {
            Some((s, k)) => (s.to_string(), k.to_string()),
            None if self.sections.get(home).is_some_and(|s| s.contains_key(lhs)) => (home.to_string(), lhs.to_string()),
            None => {
                let owners: Vec<&String> = self.sections.iter().filter(|(_, s)| s.contains_key(lhs)).map(|(n, _)| n).collect();
                match owners.as_slice() {
                    [one] => ((*one).clone(), lhs.to_string()),
                    [] => return Err(ConfigError::UnknownKey { origin: origin.into(), key: lhs.into() }),
                    many => {
                        let sections = many.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
                        return Err(ConfigError::Ambiguous { key: lhs.into(), sections });
                    }
                }
            }
        };
        let slot = self
            .sections
            .get_mut(&section)
            .and_then(|s| s.get_mut(&key))
            .ok_or_else(|| ConfigError::UnknownKey { origin: origin.into(), key: format!("{section}.{key}") })?;
        *slot = value;
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> &str {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
            .unwrap_or_else(|| panic!("{section}.{key} is missing from the built-in defaults"))
    }

    fn typed<T: FromStr>(&self, section: &str, key: &str, expected: &'static str) -> Result<T> {
        let raw = self.raw(section, key);
        raw.parse().map_err(|_| ConfigError::BadValue { key: format!("{section}.{key}"), value: raw.into(), expected })
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64> {
        let v: f64 = self.typed(section, key, "a number")?;
        if v.is_nan() {
            return Err(ConfigError::BadValue { key: format!("{section}.{key}"), value: "NaN".into(), expected: "a number" });
        }
        Ok(v)
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize> {
        self.typed(section, key, "a non-negative integer")
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<u64> {
        self.typed(section, key, "a non-negative integer")
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<bool> {
        match self.raw(section, key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(ConfigError::BadValue { key: format!("{section}.{key}"), value: other.into(), expected: "true or false" }),
        }
    }

    /// A number, or `None` for "auto".
    pub fn auto_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        if self.raw(section, key).eq_ignore_ascii_case("auto") {
            Ok(None)
        } else {
            self.f64(section, key).map(Some)
        }
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(section, key);
        raw.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| ConfigError::BadValue {
            key: format!("{section}.{key}"),
            value: raw.into(),
            expected: "comma-separated numbers",
        })
    }

    /// One `key = value` line per entry under sorted `[section]` headers.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (name, section) in &self.sections {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in section {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
