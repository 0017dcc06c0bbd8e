//! Strategy files: `{name, description, source, created_by, fitness?}`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use routeproj_core::dsl::DslProgram;
use routeproj_core::projection::{Builtin, Strategy};
use routeproj_core::ProblemKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub name: String,
    pub description: String,
    pub source: String,
    pub created_by: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
}

impl StrategyFile {
    pub fn program(&self) -> Result<DslProgram> {
        Ok(DslProgram::parse(&self.source)
            .with_context(|| format!("strategy `{}`", self.name))?
            .with_description(self.description.clone()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// A strategy chosen on the command line: `auto` (per-scale built-in), a
/// built-in or registered name, or a path to a strategy file.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategySpec {
    Auto,
    Named(String, Strategy),
}

impl StrategySpec {
    pub fn resolve(arg: &str) -> Result<Self> {
        if arg == "auto" {
            return Ok(StrategySpec::Auto);
        }
        let path = Path::new(arg);
        if arg.ends_with(".json") || path.is_file() {
            let file = StrategyFile::read(path)?;
            let program = file.program()?;
            return Ok(StrategySpec::Named(file.name, Strategy::Program(program)));
        }
        let strategy = routeproj_core::projection::registry_lookup(arg)?;
        Ok(StrategySpec::Named(arg.to_string(), strategy))
    }

    pub fn for_instance(&self, kind: ProblemKind, n: usize) -> (String, Strategy) {
        match self {
            StrategySpec::Auto => {
                let b = Builtin::for_scale(kind, n);
                (b.name().to_string(), b.into())
            }
            StrategySpec::Named(name, s) => (name.clone(), s.clone()),
        }
    }
}
