use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Flat `key = value` settings merged from a config file and `--key value`
/// overrides; the overrides win.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(
        file: Option<&Path>,
        overrides: &[String],
        allowed: &[&str],
    ) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            cfg.merge_text(&text)?;
        }
        cfg.merge_overrides(overrides)?;
        cfg.check_keys(allowed)?;
        Ok(cfg)
    }

    fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                ))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(CliError::Usage(format!(
                    "config line {}: empty key or value",
                    lineno + 1
                )));
            }
            self.values.insert(k.to_string(), v.to_string());
        }
        Ok(())
    }

    fn merge_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .filter(|k| !k.is_empty())
                .ok_or_else(|| {
                    CliError::Usage(format!("expected `--key value`, found {flag:?}"))
                })?;
            let (key, value) = match key.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::Usage(format!("missing value for --{key}")))?;
                    (key.to_string(), v.clone())
                }
            };
            self.values.insert(key, value);
        }
        Ok(())
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for k in self.values.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown key `{k}` for this command (accepted: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("bad value for `{key}`: {v:?}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// A positive finite real, defaulting when absent.
    pub fn positive(&self, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        let v = match (self.get::<f64>(key)?, default) {
            (Some(v), _) => v,
            (None, Some(d)) => d,
            (None, None) => return Err(CliError::Usage(format!("`{key}` is required"))),
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::Usage(format!(
                "`{key}` must be positive, got {v}"
            )));
        }
        Ok(v)
    }

    /// Comma-separated reals.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::Usage(format!("bad number in `{key}`: {s:?}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::default();
        c.merge_text("T = 3\n# comment\nn=11 # trailing\n\n")
            .unwrap();
        c.merge_overrides(&["--n".into(), "21".into(), "--x=0.1,0.2".into()])
            .unwrap();
        assert_eq!(c.get::<f64>("T").unwrap(), Some(3.0));
        assert_eq!(c.get::<usize>("n").unwrap(), Some(21));
        assert_eq!(c.list("x").unwrap(), Some(vec![0.1, 0.2]));
        assert!(c.check_keys(&["T", "n", "x"]).is_ok());
        assert!(c.check_keys(&["T", "n"]).is_err());
    }

    #[test]
    fn malformed_inputs() {
        let mut c = RunConfig::default();
        assert!(c.merge_text("T 3\n").is_err());
        assert!(c.merge_overrides(&["n".into(), "3".into()]).is_err());
        assert!(c.merge_overrides(&["--n".into()]).is_err());
        c.merge_overrides(&["--T".into(), "-1".into()]).unwrap();
        assert!(c.positive("T", Some(2.0)).is_err());
        c.merge_overrides(&["--n".into(), "abc".into()]).unwrap();
        assert!(c.get::<usize>("n").is_err());
    }
}
