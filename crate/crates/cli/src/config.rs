//! `key = value` settings files and flag/config/default resolution.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys accepted in a settings file. Each mirrors the long flag of the same name.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "threads",
    "format",
    "runs",
    "n-ways",
    "smoothing",
    "self-bleu-order",
    "self-bleu-smoothing",
    "dist-denominator",
    "recall-aggregation",
    "normalize-embeddings",
    "stopwords",
    "prefixes",
    "embed-endpoint",
    "embed-batch",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            let k = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("{origin}:{}: unknown key `{k}`", i + 1)));
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered key {key}");
        self.values.get(key).map(String::as_str)
    }
}

/// Flag value if given, otherwise the parsed config value.
pub fn pick<T>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    cfg.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))))
        .transpose()
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected a boolean, got `{other}`")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}
