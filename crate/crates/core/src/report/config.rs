//! Flat `key = value` configuration files mirroring the command-line flags.

use crate::error::{FrioError, Result};
use std::collections::BTreeMap;
use std::path::Path;

pub const KEYS: [&str; 13] = [
    "s",
    "eta1",
    "q-mode",
    "visibility",
    "rate",
    "time",
    "seed",
    "out",
    "format",
    "budget",
    "no-timestamp",
    "simulate",
    "config",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped,
/// underscores in keys are read as hyphens, and the last assignment wins.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(FrioError::Usage(format!(
                "config line {}: expected `key = value`, got `{line}`",
                n + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key == "config" || !KEYS.contains(&key.as_str()) {
            return Err(FrioError::Usage(format!("config line {}: unknown key `{key}`", n + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FrioError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

/// Parses a boolean config value.
pub fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(FrioError::Usage(format!("`{key}` expects true or false, got `{v}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let map = parse("# sweep\ns = 0, 0.5\n\neta1 = 0.3\neta1=0.4\nq_mode = half\n").unwrap();
        assert_eq!(map["s"], "0, 0.5");
        assert_eq!(map["eta1"], "0.4");
        assert_eq!(map["q-mode"], "half");
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("s 0.5").is_err());
        assert!(parse("colour = red").is_err());
        assert!(parse("config = other.cfg").is_err());
        assert!(parse_bool("simulate", "maybe").is_err());
        assert!(parse_bool("simulate", "Yes").unwrap());
    }
}
