//! Option layering: built-in defaults, then the config file, then flags.
//!
//! A config file is TOML or JSON. Top-level `seed`, `log` and `jobs` are the
//! global options; every other top-level key is a table named after a
//! subcommand whose keys are that subcommand's long flag names.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

pub const GLOBAL_KEYS: [&str; 3] = ["seed", "log", "jobs"];

/// A bad invocation rather than a failed operation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required (as a flag or in the config file)")))
}

/// A duration written as `60s`, `1m 30s`, `250ms` or a bare number of seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span(pub Duration);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(secs) = s.parse::<f64>() {
            return Duration::try_from_secs_f64(secs).map(Span).map_err(|e| e.to_string());
        }
        humantime::parse_duration(s).map(Span).map_err(|e| format!("`{s}`: {e}"))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", humantime::format_duration(self.0))
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Secs(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Secs(v) => Duration::try_from_secs_f64(v).map(Span).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug)]
pub struct ConfigFile {
    pub path: PathBuf,
    root: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path, commands: &[&str]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let value: Value = if is_json {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        let Value::Object(root) = value else { bail!("{}: expected a table at the top level", path.display()) };
        for (key, v) in &root {
            let known_command = commands.contains(&key.as_str());
            if !GLOBAL_KEYS.contains(&key.as_str()) && !known_command {
                return Err(usage(format!("{}: unknown key `{key}`", path.display())));
            }
            if known_command && !v.is_object() {
                return Err(usage(format!("{}: `{key}` must be a table", path.display())));
            }
        }
        Ok(ConfigFile { path: path.to_path_buf(), root })
    }

    pub fn globals(&self) -> Value {
        let picked = self.root.iter().filter(|(k, _)| GLOBAL_KEYS.contains(&k.as_str()));
        Value::Object(picked.map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    pub fn section(&self, command: &str) -> Option<&Value> {
        self.root.get(command)
    }
}

fn overlay(base: &mut Map<String, Value>, top: &Value) {
    if let Value::Object(top) = top {
        for (k, v) in top {
            if !v.is_null() {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

/// `defaults`, overridden by the file's values, overridden by set flags.
/// `defaults` must serialise every field, unset ones as null, since its keys
/// are the options the file may name.
pub fn layer<T: Serialize + DeserializeOwned>(defaults: &T, file: Option<&Value>, flags: &T, what: &str) -> Result<T> {
    let Value::Object(mut merged) = serde_json::to_value(defaults)? else { bail!("{what}: options are not a table") };
    if let Some(file) = file {
        if let Some(key) = file.as_object().and_then(|f| f.keys().find(|k| !merged.contains_key(*k))) {
            return Err(usage(format!("{what}: unknown option `{key}`")));
        }
        overlay(&mut merged, file);
    }
    overlay(&mut merged, &serde_json::to_value(flags)?);
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("{what}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case")]
    struct Opts {
        budget: Option<Span>,
        max_len: Option<usize>,
        out: Option<PathBuf>,
    }

    #[test]
    fn spans_parse_several_ways() {
        assert_eq!("60s".parse::<Span>().unwrap().0, Duration::from_secs(60));
        assert_eq!("1m 30s".parse::<Span>().unwrap().0, Duration::from_secs(90));
        assert_eq!("0.25".parse::<Span>().unwrap().0, Duration::from_millis(250));
        assert!("soon".parse::<Span>().is_err());
        let s: Span = serde_json::from_str("2").unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"2s\"");
    }

    #[test]
    fn flags_beat_the_file_which_beats_defaults() {
        let defaults = Opts { budget: Some(Span(Duration::from_secs(60))), max_len: Some(6), out: None };
        let file = serde_json::json!({ "budget": "10s", "max-len": 3 });
        let flags = Opts { max_len: Some(4), ..Opts::default() };
        let got = layer(&defaults, Some(&file), &flags, "t").unwrap();
        assert_eq!(got, Opts { budget: Some(Span(Duration::from_secs(10))), max_len: Some(4), out: None });
    }

    #[test]
    fn unknown_file_keys_are_usage_errors() {
        let file = serde_json::json!({ "bugdet": "10s" });
        let err = layer(&Opts::default(), Some(&file), &Opts::default(), "t").unwrap_err();
        assert!(err.is::<UsageError>());
    }

    #[test]
    fn config_files_are_checked_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("run.toml");
        std::fs::write(&good, "seed = 3\n[optimize]\nbudget = \"5s\"\n").unwrap();
        let c = ConfigFile::load(&good, &["optimize"]).unwrap();
        assert_eq!(c.globals(), serde_json::json!({ "seed": 3 }));
        assert_eq!(c.section("optimize").unwrap()["budget"], "5s");

        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"optimise": {}}"#).unwrap();
        assert!(ConfigFile::load(&bad, &["optimize"]).unwrap_err().is::<UsageError>());
    }
}
