//! Solutions and their invariants.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::{Instance, ProblemKind};

/// A TSP tour (one route, a permutation of all nodes) or a set of CVRP
/// routes listing customers only; each CVRP route implicitly starts and
/// ends at the depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub kind: ProblemKind,
    pub routes: Vec<Vec<usize>>,
    pub objective: f64,
    pub feasible: bool,
}

/// Length of the closed tour.
pub fn tour_length(inst: &Instance, tour: &[usize]) -> f64 {
    if tour.len() < 2 {
        return 0.0;
    }
    let closing = inst.dist(tour[tour.len() - 1], tour[0]);
    tour.windows(2).map(|w| inst.dist(w[0], w[1])).sum::<f64>() + closing
}

/// Length of depot -> route -> depot.
pub fn route_length(inst: &Instance, route: &[usize]) -> f64 {
    match (route.first(), route.last()) {
        (Some(&a), Some(&b)) => {
            inst.dist(0, a) + route.windows(2).map(|w| inst.dist(w[0], w[1])).sum::<f64>() + inst.dist(b, 0)
        }
        _ => 0.0,
    }
}

pub fn objective(inst: &Instance, kind: ProblemKind, routes: &[Vec<usize>]) -> f64 {
    match kind {
        ProblemKind::Tsp => routes.first().map_or(0.0, |t| tour_length(inst, t)),
        ProblemKind::Cvrp => routes.iter().map(|r| route_length(inst, r)).sum(),
    }
}

/// Checks the TSP permutation or the CVRP coverage/capacity invariants.
pub fn check_routes(inst: &Instance, kind: ProblemKind, routes: &[Vec<usize>]) -> Result<()> {
    let bad = |m: alloc::string::String| Err(Error::InvalidSolution(m));
    if kind != inst.kind {
        return bad(format!("{kind} solution for a {} instance", inst.kind));
    }
    let n = inst.len();
    let mut seen = vec![false; n];
    let mut mark = |id: usize| -> Result<()> {
        if id >= n {
            return Err(Error::InvalidSolution(format!("node {id} out of range")));
        }
        if core::mem::replace(&mut seen[id], true) {
            return Err(Error::InvalidSolution(format!("node {id} visited twice")));
        }
        Ok(())
    };
    match kind {
        ProblemKind::Tsp => {
            if routes.len() != 1 {
                return bad(format!("TSP solution has {} routes", routes.len()));
            }
            for &id in &routes[0] {
                mark(id)?;
            }
            if routes[0].len() != n {
                return bad(format!("tour visits {} of {n} nodes", routes[0].len()));
            }
        }
        ProblemKind::Cvrp => {
            for (r, route) in routes.iter().enumerate() {
                if route.is_empty() {
                    return bad(format!("route {r} is empty"));
                }
                let mut load = 0u64;
                for &id in route {
                    if id == 0 {
                        return bad(format!("route {r} visits the depot mid-route"));
                    }
                    mark(id)?;
                    load += u64::from(inst.demands[id]);
                }
                if load > u64::from(inst.capacity) {
                    return bad(format!("route {r} load {load} exceeds capacity {}", inst.capacity));
                }
            }
            if let Some(missing) = (1..n).find(|&i| !seen[i]) {
                return bad(format!("customer {missing} not served"));
            }
        }
    }
    Ok(())
}

impl Solution {
    /// Builds a solution, computing its objective and feasibility flag.
    pub fn new(inst: &Instance, routes: Vec<Vec<usize>>) -> Self {
        let kind = inst.kind;
        let feasible = check_routes(inst, kind, &routes).is_ok();
        Self {
            kind,
            objective: objective(inst, kind, &routes),
            routes,
            feasible,
        }
    }

    pub fn tsp(inst: &Instance, tour: Vec<usize>) -> Self {
        Self::new(inst, vec![tour])
    }

    /// The TSP tour, or the first route.
    pub fn tour(&self) -> &[usize] {
        self.routes.first().map_or(&[], Vec::as_slice)
    }

    /// Verifies every type invariant and that `objective` matches a
    /// recomputation within `1e-6` (relative for large values).
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        check_routes(inst, self.kind, &self.routes)?;
        let expect = objective(inst, self.kind, &self.routes);
        if (expect - self.objective).abs() > 1e-6 * expect.abs().max(1.0) {
            return Err(Error::InvalidSolution(format!(
                "stored objective {} but routes measure {expect}",
                self.objective
            )));
        }
        if !self.feasible {
            return Err(Error::InvalidSolution("flagged infeasible".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn square() -> Instance {
        Instance::tsp(
            "sq",
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
        )
    }

    #[test]
    fn tsp_objective_and_checks() {
        let inst = square();
        let s = Solution::tsp(&inst, vec![0, 1, 2, 3]);
        assert_eq!(s.objective, 4.0);
        s.validate(&inst).unwrap();
        assert!(!Solution::tsp(&inst, vec![0, 1, 2]).feasible);
        assert!(!Solution::tsp(&inst, vec![0, 1, 2, 2]).feasible);
        let mut t = s.clone();
        t.objective = 3.0;
        assert!(t.validate(&inst).is_err());
    }

    #[test]
    fn cvrp_checks() {
        let coords = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let inst = Instance::cvrp("c", coords, vec![0, 3, 3], 5);
        let two = Solution::new(&inst, vec![vec![1], vec![2]]);
        two.validate(&inst).unwrap();
        assert_eq!(two.objective, 4.0);
        assert!(!Solution::new(&inst, vec![vec![1, 2]]).feasible);
        assert!(!Solution::new(&inst, vec![vec![1], vec![], vec![2]]).feasible);
        assert!(!Solution::new(&inst, vec![vec![1]]).feasible);
        assert!(!Solution::new(&inst, vec![vec![1, 0], vec![2]]).feasible);
    }
}
