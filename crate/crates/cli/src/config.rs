//! Flat `key = value` job files. Lines starting with `#` are comments and keys
//! use the long flag names (`lambda-order = 3`). Flags given on the command
//! line win over file values.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key {key}")]
    Duplicate { line: usize, key: String },
    #[error("invalid value {value:?} for {key}")]
    Value { key: String, value: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JobConfig {
    values: BTreeMap<String, String>,
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: k + 1 })?;
            let key = key.trim().replace('_', "-");
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: k + 1 });
            }
            let value = value.trim().trim_matches('"').to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(ConfigError::Duplicate { line: k + 1, key });
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| ConfigError::Value { key: key.into(), value: v.into() }))
            .transpose()
    }

    /// `flag`, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, ConfigError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let c = JobConfig::parse("# job\npotential = \"X1^4\"\nlambda_order=3\n\nd = 1\n").unwrap();
        assert_eq!(c.raw("potential"), Some("X1^4"));
        assert_eq!(c.pick(None, "lambda-order", 0usize).unwrap(), 3);
        assert_eq!(c.pick(Some(5), "lambda-order", 0usize).unwrap(), 5);
        assert_eq!(c.pick(None, "genus", 1usize).unwrap(), 1);
        assert!(c.get::<usize>("potential").is_err());
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(JobConfig::parse("a = 1\nb"), Err(ConfigError::Syntax { line: 2 }));
        assert!(matches!(JobConfig::parse("a = 1\na = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
    }
}
