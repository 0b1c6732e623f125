//! Manifests: the TOML form of a job, written next to every run and accepted
//! back through `--config`.

use crate::jobs::{Job, Record};
use dissipator::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;
use toml::{Table, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub job: Job,
    /// Outputs of the run; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<Record>,
}

impl Manifest {
    pub fn new(seed: u64, job: Job) -> Self {
        Manifest { seed, job: job.with_seed(seed), record: None }
    }

    pub fn parse(text: &str, origin: &str, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let m: Manifest = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| config_error(origin, e))?
        } else {
            let mut table: Table = text.parse().map_err(|e| config_error(origin, e))?;
            for o in overrides {
                let (key, value) = split_override(o)?;
                let key = if key == "seed" || key.starts_with("job.") { key.to_string() } else { format!("job.{key}") };
                set_dotted(&mut table, &key, value)?;
            }
            Value::Table(table).try_into().map_err(|e| config_error(origin, e))?
        };
        Ok(Manifest::new(seed.unwrap_or(m.seed), m.job))
    }

    pub fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string(), overrides, seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.job.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

fn config_error(origin: &str, e: impl std::fmt::Display) -> Error {
    Error::Argument(format!("{origin}: {e}"))
}

fn split_override(o: &str) -> Result<(&str, Value)> {
    let (key, raw) = o
        .split_once('=')
        .ok_or_else(|| Error::Argument(format!("`--set {o}`: expected KEY=VALUE")))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.trim(), value))
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Argument(format!("empty key in `{key}`")))?;
    let mut t = table;
    for p in parts {
        t = t
            .entry(p)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Argument(format!("`{key}`: `{p}` is not a table")))?;
    }
    t.insert(last.into(), value);
    Ok(())
}

/// Applies `KEY=VALUE` overrides, with keys relative to the job table.
pub fn apply_overrides(job: &Job, overrides: &[String]) -> Result<Job> {
    if overrides.is_empty() {
        return Ok(job.clone());
    }
    let mut table = Table::try_from(job).map_err(|e| Error::Format(e.to_string()))?;
    for o in overrides {
        let (key, value) = split_override(o)?;
        set_dotted(&mut table, key.strip_prefix("job.").unwrap_or(key), value)?;
    }
    Value::Table(table).try_into().map_err(|e| config_error("--set", e))
}

/// A unit enum variant from its serialized name.
pub fn from_str_value<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    Value::String(s.into()).try_into().map_err(|e| e.to_string().trim().to_string())
}

pub fn from_inline_table<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    let mut t: Table = format!("v = {s}").parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    t.remove("v").unwrap_or(Value::Table(Table::new())).try_into().map_err(|e| e.to_string().trim().to_string())
}

/// Serialized name of a unit enum variant.
pub fn label<T: Serialize>(v: &T) -> String {
    Value::try_from(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobs::{CheckJob, Suite};

    fn check() -> Job {
        Job::Check(CheckJob { suite: Suite::Depths, alpha: 0.5, kappas: vec![1e-2, 1e-3], nx: 64, ny: 45, seed: 3, samples: 10 })
    }

    #[test]
    fn manifest_round_trips() {
        let m = Manifest::new(3, check());
        let back = Manifest::parse(&m.to_toml().unwrap(), "test", &[], None).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let m = Manifest::new(3, check());
        let sets = vec!["kappas=[1e-4]".to_string(), "job.alpha=0.25".to_string()];
        let back = Manifest::parse(&m.to_toml().unwrap(), "test", &sets, Some(9)).unwrap();
        let Job::Check(c) = back.job else { panic!("wrong job") };
        assert_eq!((c.kappas, c.alpha, c.seed, back.seed), (vec![1e-4], 0.25, 9, 9));
    }

    #[test]
    fn unknown_keys_are_reported_with_their_name() {
        let text = Manifest::new(3, check()).to_toml().unwrap().replace("samples", "smaples");
        let e = Manifest::parse(&text, "cfg.toml", &[], None).unwrap_err().to_string();
        assert!(e.contains("smaples") && e.contains("cfg.toml"), "{e}");
    }
}
