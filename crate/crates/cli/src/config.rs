//! Run configuration files.
//!
//! A config file is a JSON object. Top-level `seed`, `output_dir`, `format` and
//! `threads` mirror the global flags; `params` holds command flags by long name
//! (`t_list` and `t-list` both mean `--t-list`). The file is turned into flag
//! tokens placed before the command line ones, and the last occurrence of a flag
//! wins, so flags given on the command line override the file.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// must match the subcommand when present
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config is not valid JSON for a run config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config must be a JSON object")]
    NotObject,
    #[error("config parameter {key:?}: {msg}")]
    Param { key: String, msg: String },
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let v: Value = serde_json::from_str(text)?;
    // the derived impl would also take the array form
    if !v.is_object() {
        return Err(ConfigError::NotObject);
    }
    let cfg: RunConfig = serde_json::from_value(v)?;
    cfg.to_args()?;
    Ok(cfg)
}

fn valid_key(k: &str) -> bool {
    let mut chars = k.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn render(key: &str, v: &Value) -> Result<Option<String>, ConfigError> {
    let err = |msg: &str| ConfigError::Param { key: key.to_string(), msg: msg.to_string() };
    Ok(match v {
        Value::Null => None,
        Value::Bool(_) => unreachable!("handled by caller"),
        Value::Number(_) | Value::String(_) => scalar(v),
        Value::Array(items) => {
            let mut groups = Vec::with_capacity(items.len());
            let mut nested = false;
            for it in items {
                match it {
                    Value::Array(inner) => {
                        nested = true;
                        let parts: Option<Vec<String>> = inner.iter().map(scalar).collect();
                        groups.push(parts.ok_or_else(|| err("nested lists may only hold numbers or strings"))?.join(","));
                    }
                    other => groups.push(scalar(other).ok_or_else(|| err("lists may only hold numbers, strings or lists"))?),
                }
            }
            Some(groups.join(if nested { ";" } else { "," }))
        }
        Value::Object(_) => return Err(err("objects are not allowed as parameter values")),
    })
}

impl RunConfig {
    /// Flag tokens equivalent to this file, in a stable order.
    pub fn to_args(&self) -> Result<Vec<String>, ConfigError> {
        let mut out = Vec::new();
        if let Some(s) = self.seed {
            out.push(format!("--seed={s}"));
        }
        if let Some(d) = &self.output_dir {
            out.push(format!("--output-dir={d}"));
        }
        if let Some(f) = &self.format {
            out.push(format!("--format={f}"));
        }
        if let Some(t) = self.threads {
            out.push(format!("--threads={t}"));
        }
        for (k, v) in &self.params {
            if !valid_key(k) {
                return Err(ConfigError::Param { key: k.clone(), msg: "keys are lowercase flag names".into() });
            }
            let flag = k.replace('_', "-");
            if matches!(flag.as_str(), "config" | "seed" | "output-dir" | "format" | "threads") {
                return Err(ConfigError::Param { key: k.clone(), msg: "global options belong at the top level".into() });
            }
            match v {
                Value::Bool(true) => out.push(format!("--{flag}")),
                Value::Bool(false) => {}
                _ => {
                    if let Some(s) = render(k, v)? {
                        out.push(format!("--{flag}={s}"));
                    }
                }
            }
        }
        Ok(out)
    }
}
