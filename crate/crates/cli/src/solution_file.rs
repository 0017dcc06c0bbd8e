//! Line-oriented solution files.
//!
//! ```text
//! KIND : CVRP
//! OBJECTIVE : 12.5
//! FEASIBLE : true
//! ROUTE : 3 1 4
//! ROUTE : 2 5
//! ```
//!
//! Node ids are 0-based instance ids. A TSP file has one route holding the
//! whole tour; CVRP routes list customers only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use routeproj_core::solution::objective;
use routeproj_core::{Instance, ProblemKind, Solution};

/// Relative tolerance between stored and recomputed objectives.
pub const OBJECTIVE_TOL: f64 = 1e-6;

pub fn to_string(sol: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "KIND : {}", sol.kind);
    let _ = writeln!(s, "OBJECTIVE : {}", sol.objective);
    let _ = writeln!(s, "FEASIBLE : {}", sol.feasible);
    for r in &sol.routes {
        s.push_str("ROUTE :");
        for id in r {
            let _ = write!(s, " {id}");
        }
        s.push('\n');
    }
    s
}

pub fn write(sol: &Solution, path: &Path) -> Result<()> {
    fs::write(path, to_string(sol)).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path, inst: &Instance) -> Result<Solution> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, inst).with_context(|| format!("loading {}", path.display()))
}

/// Parses and verifies a solution against `inst`.
pub fn parse(text: &str, inst: &Instance) -> Result<Solution> {
    let mut kind = None;
    let mut stored = None;
    let mut feasible = None;
    let mut routes: Vec<Vec<usize>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| anyhow!("line {}: expected `KEY : value`", idx + 1))?;
        let value = value.trim();
        match key.trim() {
            "KIND" => kind = Some(value.parse::<ProblemKind>().map_err(|e| anyhow!("line {}: {e}", idx + 1))?),
            "OBJECTIVE" => stored = Some(value.parse::<f64>().with_context(|| format!("line {}", idx + 1))?),
            "FEASIBLE" => feasible = Some(value.parse::<bool>().with_context(|| format!("line {}", idx + 1))?),
            "ROUTE" => routes.push(
                value
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .with_context(|| format!("line {}: bad node id", idx + 1))?,
            ),
            other => bail!("line {}: unknown field `{other}`", idx + 1),
        }
    }
    let kind = kind.ok_or_else(|| anyhow!("missing KIND"))?;
    let stored = stored.ok_or_else(|| anyhow!("missing OBJECTIVE"))?;
    let feasible = feasible.ok_or_else(|| anyhow!("missing FEASIBLE"))?;
    if kind == ProblemKind::Cvrp && routes.iter().any(Vec::is_empty) {
        bail!("empty CVRP route");
    }
    let recomputed = objective(inst, kind, &routes);
    if (recomputed - stored).abs() > OBJECTIVE_TOL * recomputed.abs().max(1.0) {
        bail!("corrupt solution file: stored objective {stored}, recomputed {recomputed}");
    }
    let sol = Solution {
        kind,
        routes,
        objective: stored,
        feasible,
    };
    sol.validate(inst)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use routeproj_core::instance::gen_uniform;

    #[test]
    fn tampered_objective_rejected() {
        let inst = gen_uniform(5, ProblemKind::Tsp, None, 0).unwrap();
        let sol = Solution::tsp(&inst, vec![0, 1, 2, 3, 4]);
        let text = to_string(&sol).replace(&format!("OBJECTIVE : {}", sol.objective), "OBJECTIVE : 1.5");
        let e = format!("{:#}", parse(&text, &inst).unwrap_err());
        assert!(e.contains("corrupt solution file"), "{e}");
    }

    #[test]
    fn empty_route_rejected() {
        let inst = gen_uniform(3, ProblemKind::Cvrp, Some(30), 0).unwrap();
        let text = "KIND : CVRP\nOBJECTIVE : 0\nFEASIBLE : true\nROUTE :\n";
        assert!(format!("{:#}", parse(text, &inst).unwrap_err()).contains("empty"));
    }
}
