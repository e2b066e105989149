//! Flat `key = value` configuration files for `kstab experiment`.
//!
//! One setting per line. `#` starts a comment that runs to the end of the
//! line; blank lines are ignored. Keys are the long flag names with `-` or
//! `_` accepted interchangeably. Values are taken verbatim after trimming,
//! and optional matching double quotes around a value are removed.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: [&str; 15] = [
    "model", "modes", "scheme", "k_range", "reps", "n", "restarts", "seed", "eval_n",
    "normalize", "max_iter", "delta_miss", "wmin", "out_dir", "prefix",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        text.parse().with_context(|| format!("in config {}", path.display()))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `flag` when given, else the parsed file value, else `None`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key} = {v:?}: {e}")))
            .transpose()
    }
}

impl FromStr for Config {
    type Err = anyhow::Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key {key:?}", i + 1);
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            if values.insert(key.clone(), value.to_string()).is_some() {
                bail!("line {}: duplicate key {key:?}", i + 1);
            }
        }
        Ok(Config { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_quotes_and_dashes() {
        let c: Config = "# sweep\nmodel = balanced2d\nk-range = 2..7  # inclusive\n\nprefix = \"run a\"\n"
            .parse()
            .unwrap();
        assert_eq!(c.raw("model"), Some("balanced2d"));
        assert_eq!(c.raw("k_range"), Some("2..7"));
        assert_eq!(c.raw("prefix"), Some("run a"));
        assert_eq!(c.raw("reps"), None);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!("colour = red".parse::<Config>().is_err());
        assert!("n = 1\nn = 2".parse::<Config>().is_err());
        assert!("just words".parse::<Config>().is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let c: Config = "reps = 5\nn = 40".parse().unwrap();
        assert_eq!(c.pick(Some(9usize), "reps").unwrap(), Some(9));
        assert_eq!(c.pick(None::<usize>, "reps").unwrap(), Some(5));
        assert_eq!(c.pick(None::<usize>, "seed").unwrap(), None);
        let bad: Config = "n = many".parse().unwrap();
        assert!(bad.pick(None::<usize>, "n").is_err());
    }
}
