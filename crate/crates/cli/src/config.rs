//! Flat `key = value` configuration files. Command-line flags win over
//! file values; file values win over built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use routeproj_core::policy::PolicyKind;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Lines are `key = value`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            let key = k.trim().replace('-', "_");
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("config line {}: duplicate key `{key}`", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses `key` if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
            .transpose()
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// Policy by name with the surrogate constants overridable by
    /// `w_last`, `w_anchor`, `w_x`, `w_y`, `sigma_last`, `sigma_anchor`,
    /// `w_depot`.
    pub fn policy(&self, name: &str) -> Result<PolicyKind> {
        let kind: PolicyKind = name.parse()?;
        let PolicyKind::ScaleSensitive(mut p) = kind else {
            return Ok(kind);
        };
        let fields: [(&str, &mut f64); 7] = [
            ("w_last", &mut p.w_last),
            ("w_anchor", &mut p.w_anchor),
            ("w_x", &mut p.w_x),
            ("w_y", &mut p.w_y),
            ("sigma_last", &mut p.sigma_last),
            ("sigma_anchor", &mut p.sigma_anchor),
            ("w_depot", &mut p.w_depot),
        ];
        for (key, slot) in fields {
            if let Some(v) = self.get::<f64>(key)? {
                *slot = v;
            }
        }
        if !(p.sigma_last > 0.0 && p.sigma_anchor > 0.0) {
            bail!("policy widths must be positive");
        }
        Ok(PolicyKind::ScaleSensitive(p))
    }
}
