//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// `#` starts a comment; blank lines are skipped; keys use `_` or `-`
    /// interchangeably.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Parse {
                    line: i + 1,
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(CliError::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            cfg.values.insert(key, v.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { line, message } => CliError::Usage(format!("{}:{line}: {message}", path.display())),
            other => other,
        })
    }

    /// Applies `--key value` pairs (or `--key=value`) on top of the file.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(flag) = arg.strip_prefix("--") else {
                return Err(CliError::Usage(format!("unexpected argument '{arg}', overrides take the form --key value")));
            };
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::Usage(format!("missing value for --{flag}")))?;
                    (flag.to_string(), v.clone())
                }
            };
            self.values.insert(normalize_key(&key), value.trim().to_string());
        }
        Ok(())
    }

    pub fn set_default(&mut self, key: &str, value: impl Into<String>) {
        self.values.entry(normalize_key(key)).or_insert_with(|| value.into());
    }

    /// Rejects keys the subcommand does not read, so typos fail loudly.
    pub fn check_known(&self, known: &[&str]) -> Result<(), CliError> {
        for k in self.values.keys() {
            if !known.contains(&k.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown key '{k}' for this command (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            Some(v) => parse_real(v).map_err(|m| bad_value(key, m)),
            None => Ok(default),
        }
    }

    pub fn f64_required(&self, key: &str) -> Result<f64, CliError> {
        let v = self.get(key).ok_or_else(|| CliError::Usage(format!("missing required key '{key}'")))?;
        parse_real(v).map_err(|m| bad_value(key, m))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            Some(v) => parse_u64(v).map_err(|m| bad_value(key, m)),
            None => Ok(default),
        }
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key).map(|v| parse_u64(v).map_err(|m| bad_value(key, m))).transpose()
    }

    pub fn f64_list_or(&self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        parse_real_list(self.str_or(key, default)).map_err(|m| bad_value(key, m))
    }

    pub fn usize_list_or(&self, key: &str, default: &str) -> Result<Vec<usize>, CliError> {
        split_list(self.str_or(key, default))
            .into_iter()
            .map(|t| parse_u64(t).map(|v| v as usize).map_err(|m| bad_value(key, m)))
            .collect()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.u64_or("seed", DEFAULT_SEED)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.str_or("output_dir", "."))
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn bad_value(key: &str, message: String) -> CliError {
    CliError::Usage(format!("bad value for '{key}': {message}"))
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("'{s}' is not a non-negative integer"))
}

/// Plain decimals, plus `ln(x)` since budgets are often given as logs.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = if let Some(inner) = s.strip_prefix("ln(").and_then(|r| r.strip_suffix(')')) {
        let x: f64 = inner.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
        x.ln()
    } else {
        s.parse().map_err(|_| format!("'{s}' is not a number"))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Comma list of reals, or `start:stop:count` for an evenly spaced grid.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range '{s}' must be start:stop:count"));
        }
        let a = parse_real(parts[0])?;
        let b = parse_real(parts[1])?;
        let n = parse_u64(parts[2])? as usize;
        return Ok(match n {
            0 => vec![],
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    split_list(s).into_iter().map(parse_real).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut cfg = Config::parse("# comment\nseed = 7\nbeta=0.1 # trailing\n\noutput-dir = out\n").unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.get("output_dir"), Some("out"));
        cfg.apply_overrides(&["--beta".into(), "0.2".into(), "--seed=9".into()]).unwrap();
        assert_eq!(cfg.f64_or("beta", 0.0).unwrap(), 0.2);
        assert_eq!(cfg.seed().unwrap(), 9);
        assert!(cfg.apply_overrides(&["--eta".into()]).is_err());
        assert!(cfg.apply_overrides(&["eta".into(), "1".into()]).is_err());
    }

    #[test]
    fn parse_errors_carry_lines() {
        match Config::parse("a = 1\nnonsense\n") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reals_and_grids() {
        assert!((parse_real("ln(3)").unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(parse_real("nan").is_err());
        assert_eq!(parse_real_list("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_real_list("0.25, 0.5,1").unwrap(), vec![0.25, 0.5, 1.0]);
        assert!(parse_real_list("").unwrap().is_empty());
        assert!(parse_real_list("0:1").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let cfg = Config::parse("seed = 1\nbta = 0.1\n").unwrap();
        assert!(cfg.check_known(&["seed", "beta"]).is_err());
        assert!(cfg.check_known(&["seed", "bta"]).is_ok());
    }
}
