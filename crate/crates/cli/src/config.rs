//! Parameter resolution: command-line flag, then config file, then default.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value, found '{}'", k + 1, raw.trim()))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", k + 1));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key '{key}'", k + 1));
        }
    }
    Ok(out)
}

pub struct Params {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: Map<String, Value>,
}

impl Params {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", p.display())))?;
                parse_config(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", p.display())))?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { file, used: BTreeSet::new(), resolved: Map::new() })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key '{key}' = '{v}': {e}"))),
            None => Ok(None),
        }
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.resolved.insert(key.to_string(), v);
    }

    /// Optional parameter with no default.
    pub fn opt<T: FromStr + Serialize>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match cli {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        self.used.insert(key.to_string());
        self.record(key, &v);
        Ok(v)
    }

    pub fn get<T: FromStr + Serialize>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.opt(key, cli)?.unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    pub fn require<T: FromStr + Serialize>(&mut self, key: &str, cli: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.opt(key, cli)?
            .ok_or_else(|| CliError::Usage(format!("missing required parameter --{key} (flag or config key)")))
    }

    /// Adds a derived value to the manifest without consulting the file.
    pub fn note<T: Serialize>(&mut self, key: &str, value: &T) {
        self.record(key, value);
    }

    /// Rejects config keys the subcommand does not understand.
    pub fn finish(self) -> Result<Map<String, Value>, CliError> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Usage(format!("unknown config key(s): {}", list.join(", "))));
        }
        Ok(self.resolved)
    }
}

/// Comma-separated floats, or `lin:LO:HI:N` / `log:LO:HI:N` with `N` points.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((kind, rest)) = text.split_once(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected {kind}:LO:HI:N, found '{text}'"));
        };
        let lo: f64 = lo.trim().parse().map_err(|e| format!("'{lo}': {e}"))?;
        let hi: f64 = hi.trim().parse().map_err(|e| format!("'{hi}': {e}"))?;
        let n: usize = n.trim().parse().map_err(|e| format!("'{n}': {e}"))?;
        if n < 2 {
            return Err("a range needs at least 2 points".into());
        }
        return match kind {
            "lin" => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
            "log" if lo > 0.0 && hi > 0.0 => Ok(hgl_core::stationary::log_grid(lo, hi, n)),
            "log" => Err("log ranges need positive end points".into()),
            other => Err(format!("unknown range kind '{other}' (use lin or log)")),
        };
    }
    let values: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", s.trim())))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}
